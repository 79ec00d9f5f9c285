#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vrlab/adaptive_rr/controller.hpp"
#include "vrlab/agent/networks.hpp"
#include "vrlab/augment/augment.hpp"
#include "vrlab/envlab/env.hpp"
#include "vrlab/replay/replay.hpp"

namespace vrlab {

struct AgentConfig {
  int64_t frame_stack = 3;
  int64_t frame_size = 48;
  int64_t action_dim = 2;
  int64_t features_dim = 50;
  int64_t hidden_dim = 256;
  float lr = 1e-4f;
  float tau = 0.01f;
  float stddev_start = 1.0f;
  float stddev_end = 0.1f;
  int64_t stddev_horizon = 10000;
  float noise_clip = 0.3f;
  InitScheme init_scheme = InitScheme::orthogonal;
  // interventions wired into the network / the update rule
  bool layer_norm = false;
  bool spectral_norm = false;
  bool crelu_critic = false;
  float weight_decay = 0.0f;   // 0 disables
  float l2_init_coef = 0.0f;   // 0 disables; applies to critic heads
  bool l2_init_encoder = false;
};

enum class ActMode { explore, eval };

// Deterministic actor-critic over a shared pixel encoder with twin critics,
// twin targets and n-step TD targets. The encoder is trained by the critic
// loss only; the actor update sees detached features.
class Agent {
 public:
  Agent(const AgentConfig& cfg, Rng& init_rng);

  std::vector<double> act(const Observation& obs, ActMode mode, Rng& noise_rng);

  // y = r_n + discount_n * min(Q'1, Q'2)(z', pi(z') + clipped noise), no grads.
  TensorPtr<float> td_target(const Batch& batch, Rng& noise_rng);

  // One critic update on an (already augmented) batch; steps encoder + critics,
  // then soft-updates the targets. Returns the critic loss.
  float update_critic(const Batch& batch, Rng& noise_rng);

  // One actor update; steps actor parameters only. Returns the actor loss.
  // The second form reuses already-encoded (detached) features for the same
  // batch, sparing the encoder forward that update_critic just ran.
  float update_actor(const Batch& batch);
  float update_actor(const Batch& batch, const TensorPtr<float>& detached_features);

  // Detached copy of the features update_critic computed for its batch.
  TensorPtr<float> cached_features() const { return cached_features_; }

  float sigma(int64_t step) const;

  const AgentConfig& config() const { return cfg_; }
  int64_t env_step = 0;

  Encoder<float>& encoder() { return encoder_; }
  HeadEnsemble<float>& actor() { return actor_; }
  HeadEnsemble<float>& critic1() { return q1_; }
  HeadEnsemble<float>& critic2() { return q2_; }
  HeadEnsemble<float>& target_critic1() { return tq1_; }
  HeadEnsemble<float>& target_critic2() { return tq2_; }

  std::vector<Parameter<float>*> encoder_params() { return encoder_.params(); }
  std::vector<Parameter<float>*> actor_params() { return actor_.params(); }
  std::vector<Parameter<float>*> critic_params();         // online heads
  std::vector<Parameter<float>*> target_critic_params();  // same order as critic_params
  std::vector<Parameter<float>*> all_params();
  Parameter<float>* find_param(const std::string& name);

  // Forward helpers shared with the plasticity probes.
  TensorPtr<float> encode(Tape<float>* tape, const TensorPtr<float>& pixels, FauProbe* p = nullptr);
  TensorPtr<float> actor_mu(Tape<float>* tape, const TensorPtr<float>& z, FauProbe* p = nullptr);
  TensorPtr<float> q_value(Tape<float>* tape, HeadEnsemble<float>& head, const TensorPtr<float>& z,
                           const TensorPtr<float>& action, FauProbe* p = nullptr);

 private:
  AgentConfig cfg_;
  Encoder<float> encoder_;
  HeadEnsemble<float> actor_;
  HeadEnsemble<float> q1_, q2_, tq1_, tq2_;
  TensorPtr<float> cached_features_;
};

// Context threaded through one environment interaction + its updates.
struct TrainStepCtx {
  ReplayBuffer* buffer = nullptr;
  Env* env = nullptr;
  RRController* rr = nullptr;
  const ShiftAugmentConfig* da = nullptr;
  Rng* noise_rng = nullptr;
  Rng* augment_rng = nullptr;
  Rng* sample_rng = nullptr;
  int batch_size = 16;
  int nstep = 3;
  float gamma = 0.99f;
  int64_t seed_frames = 400;
  int64_t exploration_steps = 200;
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  int updates = 0;
  float critic_loss = 0.0f;
  float actor_loss = 0.0f;
  bool trained = false;
};

// One environment interaction (act -> step -> push), then as many gradient
// updates as the replay-ratio accumulator releases. Each update samples a
// fresh batch; critic and actor share its augmented observations.
StepOutcome train_step(Agent& agent, Observation& obs, TrainStepCtx& ctx);

}  // namespace vrlab
