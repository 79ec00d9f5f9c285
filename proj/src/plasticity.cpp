#include "vrlab/plasticity/plasticity.hpp"

#include <cmath>

#include "vrlab/errors.hpp"

namespace vrlab {

double fau_from_probe(const FauProbe& probe, const std::string& module_name) {
  if (probe.total == 0)
    throw ConfigError("measure_fau: " + module_name + " has no rectified units");
  return probe.fraction();
}

namespace {

double group_norm_sq(const std::vector<Parameter<float>*>& params) {
  double acc = 0.0;
  for (const auto* p : params)
    for (float v : p->value->data) acc += static_cast<double>(v) * v;
  return acc;
}

bool matches_any(const std::string& name, const std::vector<std::string>& patterns) {
  for (const auto& pat : patterns)
    if (!pat.empty() && name.find(pat) != std::string::npos) return true;
  return false;
}

// Re-draw one parameter according to its construction semantics.
void redraw(Parameter<float>& p, InitScheme scheme, Rng& rng) {
  const std::string& n = p.name;
  if (n.size() >= 7 && n.compare(n.size() - 7, 7, ".weight") == 0) {
    p.value->data = init_layer<float>(p.value->shape, scheme, rng).data;
  } else if (n.size() >= 5 && n.compare(n.size() - 5, 5, ".gain") == 0) {
    std::fill(p.value->data.begin(), p.value->data.end(), 1.0f);
  } else {
    std::fill(p.value->data.begin(), p.value->data.end(), 0.0f);
  }
  p.adam.reset(p.value->data.size());
}

}  // namespace

double measure_fau(ModuleTag tag, Agent& agent, const EvalBatch& batch) {
  FauProbe probe;
  if (tag == ModuleTag::encoder) {
    agent.encode(nullptr, batch.obs, &probe);
    return fau_from_probe(probe, "encoder");
  }
  auto z = agent.encode(nullptr, batch.obs);
  if (tag == ModuleTag::actor) {
    agent.actor_mu(nullptr, z, &probe);
    return fau_from_probe(probe, "actor");
  }
  agent.q_value(nullptr, agent.critic1(), z, batch.action, &probe);
  agent.q_value(nullptr, agent.critic2(), z, batch.action, &probe);
  return fau_from_probe(probe, "critic");
}

FAUReport measure_fau_report(Agent& agent, const EvalBatch& batch, int64_t step) {
  FAUReport r;
  r.step = step;
  FauProbe enc, act, cri;
  auto z = agent.encode(nullptr, batch.obs, &enc);
  agent.actor_mu(nullptr, z, &act);
  agent.q_value(nullptr, agent.critic1(), z, batch.action, &cri);
  agent.q_value(nullptr, agent.critic2(), z, batch.action, &cri);
  r.phi_encoder = fau_from_probe(enc, "encoder");
  r.phi_actor = fau_from_probe(act, "actor");
  r.phi_critic = fau_from_probe(cri, "critic");
  r.weight_norms = snapshot_weight_norms(agent);
  return r;
}

std::map<std::string, double> snapshot_weight_norms(Agent& agent) {
  std::map<std::string, double> out;
  const double enc = group_norm_sq(agent.encoder_params());
  const double act = group_norm_sq(agent.actor_params());
  const double cri = group_norm_sq(agent.critic_params());
  out["encoder"] = std::sqrt(enc);
  out["actor"] = std::sqrt(act);
  out["critic"] = std::sqrt(cri);
  out["total"] = std::sqrt(enc + act + cri);
  return out;
}

void reset_heads(Agent& agent, const std::vector<std::string>& patterns, Rng& rng) {
  const InitScheme scheme = agent.config().init_scheme;
  std::vector<Parameter<float>*> heads = agent.actor_params();
  for (auto* p : agent.critic_params()) heads.push_back(p);

  int matched = 0;
  for (auto* p : heads) {
    if (!matches_any(p->name, patterns)) continue;
    redraw(*p, scheme, rng);
    matched += 1;
  }
  if (matched == 0) throw ConfigError("reset: no parameters match the given patterns");

  // Fresh online heads are copied into the target copies rather than re-drawn
  // independently.
  auto online = agent.critic_params();
  auto targets = agent.target_critic_params();
  for (size_t i = 0; i < online.size(); ++i)
    if (matches_any(online[i]->name, patterns)) targets[i]->value->data = online[i]->value->data;
}

void inject_plasticity(Agent& agent, const std::string& module, Rng& rng) {
  if (module == "actor") {
    if (agent.actor().injected()) throw ConfigError("plasticity injection: actor already injected");
    auto fresh = agent.actor().base().clone("actor.fresh", true, &rng);
    agent.actor().inject(fresh);
    return;
  }
  if (module == "critic") {
    if (agent.critic1().injected() || agent.critic2().injected())
      throw ConfigError("plasticity injection: critic already injected");
    auto fresh1 = agent.critic1().base().clone("critic.q1.fresh", true, &rng);
    agent.critic1().inject(fresh1);
    agent.target_critic1().inject(fresh1);
    auto fresh2 = agent.critic2().base().clone("critic.q2.fresh", true, &rng);
    agent.critic2().inject(fresh2);
    agent.target_critic2().inject(fresh2);
    return;
  }
  throw ConfigError("plasticity injection: unknown module '" + module + "'");
}

void shrink_and_perturb(Agent& agent, const std::vector<std::string>& patterns, double alpha,
                        Rng& rng, bool zero_fresh) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractViolation("shrink_and_perturb: alpha in (0,1]");
  const InitScheme scheme = agent.config().init_scheme;
  int matched = 0;
  for (auto* p : agent.critic_params()) {
    if (!matches_any(p->name, patterns)) continue;
    const std::string& n = p->name;
    const bool is_weight = n.size() >= 7 && n.compare(n.size() - 7, 7, ".weight") == 0;
    const bool is_bias = n.size() >= 5 && n.compare(n.size() - 5, 5, ".bias") == 0;
    if (!is_weight && !is_bias) continue;  // layer-norm params keep their scale
    matched += 1;
    const float a = static_cast<float>(alpha);
    if (is_weight && !zero_fresh) {
      Tensor<float> fresh = init_layer<float>(p->value->shape, scheme, rng);
      for (int64_t i = 0; i < p->value->numel(); ++i)
        p->value->data[i] = a * p->value->data[i] + fresh.data[i];
    } else {
      for (auto& w : p->value->data) w = a * w;  // fresh bias init is zero
    }
  }
  if (matched == 0) throw ConfigError("shrink_and_perturb: no parameters match");
}

}  // namespace vrlab
