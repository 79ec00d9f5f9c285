#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vrlab/augment/augment.hpp"
#include "vrlab/envlab/env.hpp"
#include "vrlab/numerics/init.hpp"
#include "vrlab/plasticity/plasticity.hpp"

namespace vrlab {

// Flat `key = value` text with dotted sections and '#' comments. Keys are
// validated against the schema; unknown keys are configuration errors so a
// config file stays a faithful experiment record.
struct RawConfig {
  std::map<std::string, std::string> kv;

  static RawConfig from_file(const std::string& path);
  static RawConfig from_text(const std::string& text);
  void set(const std::string& key, const std::string& value) { kv[key] = value; }
};

struct ExperimentConfig {
  EnvSpec env;

  int64_t total_steps = 50000;
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string protocol = "standard";
  std::string output_dir = "out";
  bool eval_enabled = false;
  int eval_interval_episodes = 20;
  int eval_episodes = 10;

  // agent / optimizer
  int batch_size = 16;
  float lr = 1e-4f;
  float tau = 0.01f;
  float gamma = 0.99f;
  int nstep = 3;
  int64_t features_dim = 50;
  int64_t hidden_dim = 256;
  float stddev_start = 1.0f;
  float stddev_end = 0.1f;
  int64_t stddev_horizon = 10000;
  float noise_clip = 0.3f;
  InitScheme init_scheme = InitScheme::orthogonal;

  // replay
  int64_t replay_capacity = 100000;
  int64_t seed_frames = 400;
  int64_t exploration_steps = 200;

  ShiftAugmentConfig da;        // da.pad < 0 = derive from frame size
  InterventionConfig interventions;

  // replay ratio
  std::string rr_mode = "static";
  double rr_value = 0.5;
  double rr_low = 0.5;
  double rr_high = 2.0;
  double rr_epsilon = 0.001;
  int rr_check_interval_episodes = 50;
  double rr_phi_ema = 0.0;

  // measurement cadence
  int fau_interval_episodes = 10;
  int fau_batch_size = 256;
  // "anchor": one probe batch drawn at the first measurement and reused, so
  // checkpoint-to-checkpoint FAU differences reflect weight drift alone.
  // "fresh": resample the probe batch at every measurement.
  std::string fau_eval = "anchor";

  // protocol parameters
  int64_t da_toggle_step = -1;  // -1 = total_steps / 2
  std::vector<double> rr_sweep = {0.5, 1.0, 2.0, 4.0};
  int64_t priming_transitions = 200;
  int64_t priming_updates = 10000;
  bool priming_enabled = false;  // set by protocol expansion, not a config key

  int derived_pad() const;
  int64_t rr_check_interval_steps() const {
    return static_cast<int64_t>(rr_check_interval_episodes) * env.episode_len;
  }
};

ExperimentConfig build_config(const RawConfig& raw);
ExperimentConfig load_config(const std::string& path);

// Serializes the fully resolved config back to the flat text form.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace vrlab
