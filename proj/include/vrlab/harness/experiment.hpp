#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrlab/harness/config.hpp"

namespace vrlab {

// One fully resolved training configuration within a protocol.
struct ArmSpec {
  std::string name;
  ExperimentConfig cfg;
};

// Protocols expand into their experimental arms; factorial protocols produce
// the full cross-product.
std::vector<ArmSpec> expand_protocol(const ExperimentConfig& base);

struct RunResult {
  std::string arm;
  uint64_t seed = 0;
  std::string csv_path;
  std::string ckpt_path;
  int64_t total_updates = 0;
  bool aborted = false;
  std::optional<int64_t> rr_switch_step;
  double final_return_mean = 0.0;  // mean over the last 10 training episodes
};

// Runs one (arm, seed) training job, writing metrics.csv, resolved.cfg and a
// final checkpoint under <out_root>/<arm>/seed<seed>/.
RunResult run_single(const ExperimentConfig& cfg, const std::string& arm_name, uint64_t seed,
                     const std::string& out_root);

// Expands the protocol and runs every (arm, seed) job. Jobs are fully
// independent, so `workers` of them may run concurrently.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, int workers = 1);

// Output root resolution: $VRLAB_OUTPUT_ROOT prefixes relative output dirs.
std::string resolve_output_root(const std::string& output_dir);

}  // namespace vrlab
