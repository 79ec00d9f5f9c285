#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vrlab/agent/agent.hpp"

namespace vrlab {

enum class ModuleTag { encoder, actor, critic };

// Observations + stored actions drawn from the buffer with augmentation off.
struct EvalBatch {
  TensorPtr<float> obs;     // [B, stack, H, W]
  TensorPtr<float> action;  // [B, A]
};

struct FAUReport {
  int64_t step = 0;
  double phi_encoder = 0.0;
  double phi_actor = 0.0;
  double phi_critic = 0.0;
  std::map<std::string, double> weight_norms;
};

// Fraction of active units: the indicator 1(a > 0) averaged over every hidden
// post-rectifier unit of the module and over the batch. Inference mode, no
// side effects; calling it twice returns the same value.
double measure_fau(ModuleTag tag, Agent& agent, const EvalBatch& batch);

// A probe that saw no rectified units means the module has none: config error.
double fau_from_probe(const FauProbe& probe, const std::string& module_name);

// All three modules measured on one shared forward pass, plus weight norms.
FAUReport measure_fau_report(Agent& agent, const EvalBatch& batch, int64_t step);

// L2 norms aggregated per module ("encoder", "actor", "critic") plus "total"
// = sqrt of the sum of squared group norms.
std::map<std::string, double> snapshot_weight_norms(Agent& agent);

// Interventions ------------------------------------------------------------

struct ResetConfig {
  int count = 0;          // resets per run; 0 disables
  int64_t interval = 0;   // explicit period in env steps; 0 = derive from count
  std::vector<std::string> targets = {"actor.", "critic."};
};

struct InjectionConfig {
  std::string module;     // "actor" or "critic"; empty disables
  int64_t step = -1;
};

struct ShrinkPerturbConfig {
  int64_t interval = 0;   // 0 disables
  double alpha = 0.8;
  std::vector<std::string> targets = {"critic."};
};

struct L2InitConfig {
  double coef = 0.0;      // 0 disables; 1e-2 is the usual setting
  bool include_encoder = false;
};

struct InterventionConfig {
  ResetConfig reset;
  InjectionConfig injection;
  ShrinkPerturbConfig shrink_perturb;
  L2InitConfig l2_init;
  double weight_decay = 0.0;
  bool layer_norm = false;
  bool spectral_norm = false;
  bool crelu_critic = false;
};

// Re-draws matched actor/critic head parameters from their init scheme, zeroes
// their Adam moments and copies the new online heads into the target copies.
// Encoder and replay buffer are untouched. Patterns are substring matches
// against parameter names; matching nothing is a configuration error.
void reset_heads(Agent& agent, const std::vector<std::string>& patterns, Rng& rng);

// Output-preserving injection: freezes the module's head and adds a trainable
// fresh copy minus a frozen twin of the same fresh initialization. Critic
// injection covers both Q heads and their targets.
void inject_plasticity(Agent& agent, const std::string& module, Rng& rng);

// w <- alpha*w + fresh for matched online critic weights (biases shrink toward
// zero since their fresh draw is zero; layer-norm params are left alone).
// `zero_fresh` forces the fresh draw to zero, for oracle tests.
void shrink_and_perturb(Agent& agent, const std::vector<std::string>& patterns, double alpha,
                        Rng& rng, bool zero_fresh = false);

// coef * sum over params of ||theta - theta0||^2 (value only; the taped
// version lives inside the critic update).
template <typename T>
T l2_init_penalty(const std::vector<Parameter<T>*>& params, T coef) {
  T acc = T(0);
  for (const auto* p : params) {
    for (int64_t i = 0; i < p->value->numel(); ++i) {
      const T d = p->value->data[i] - p->initial.data[i];
      acc += d * d;
    }
  }
  return coef * acc;
}

}  // namespace vrlab
