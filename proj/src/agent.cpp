#include "vrlab/agent/agent.hpp"

#include <algorithm>
#include <cmath>

#include "vrlab/errors.hpp"

namespace vrlab {

namespace {

std::vector<MlpLayerSpec> head_specs(int64_t hidden, int64_t out, Act hidden_act, bool ln, bool sn) {
  // Spectral norm goes on the initial linear layer only; layer norm on hidden
  // layers, never on the output layer.
  return {
      {hidden, hidden_act, ln, sn},
      {hidden, hidden_act, ln, false},
      {out, Act::identity, false, false},
  };
}

void zero_grads(const std::vector<Parameter<float>*>& params) {
  for (auto* p : params) p->value->zero_grad();
}

}  // namespace

Agent::Agent(const AgentConfig& cfg, Rng& init_rng) : cfg_(cfg) {
  encoder_ = Encoder<float>("encoder", cfg.frame_stack, cfg.frame_size, cfg.frame_size,
                            cfg.features_dim, cfg.layer_norm, cfg.init_scheme, cfg.lr, init_rng);
  actor_ = HeadEnsemble<float>(Mlp<float>(
      "actor", cfg.features_dim,
      head_specs(cfg.hidden_dim, cfg.action_dim, Act::relu, cfg.layer_norm, cfg.spectral_norm),
      cfg.init_scheme, cfg.lr, init_rng));
  const Act critic_act = cfg.crelu_critic ? Act::crelu : Act::relu;
  const int64_t q_in = cfg.features_dim + cfg.action_dim;
  q1_ = HeadEnsemble<float>(
      Mlp<float>("critic.q1", q_in,
                 head_specs(cfg.hidden_dim, 1, critic_act, cfg.layer_norm, cfg.spectral_norm),
                 cfg.init_scheme, cfg.lr, init_rng));
  q2_ = HeadEnsemble<float>(
      Mlp<float>("critic.q2", q_in,
                 head_specs(cfg.hidden_dim, 1, critic_act, cfg.layer_norm, cfg.spectral_norm),
                 cfg.init_scheme, cfg.lr, init_rng));
  tq1_ = HeadEnsemble<float>(q1_.base().clone("target_critic.q1", false, nullptr));
  tq2_ = HeadEnsemble<float>(q2_.base().clone("target_critic.q2", false, nullptr));
}

float Agent::sigma(int64_t step) const {
  const double frac = std::min(1.0, static_cast<double>(step) / cfg_.stddev_horizon);
  return static_cast<float>(cfg_.stddev_start + (cfg_.stddev_end - cfg_.stddev_start) * frac);
}

TensorPtr<float> Agent::encode(Tape<float>* tape, const TensorPtr<float>& pixels, FauProbe* p) {
  return encoder_.forward(tape, pixels, p);
}

TensorPtr<float> Agent::actor_mu(Tape<float>* tape, const TensorPtr<float>& z, FauProbe* p) {
  return actor_.forward(tape, z, p);
}

TensorPtr<float> Agent::q_value(Tape<float>* tape, HeadEnsemble<float>& head,
                                const TensorPtr<float>& z, const TensorPtr<float>& action,
                                FauProbe* p) {
  auto qin = concat_cols(tape, z, action);
  return head.forward(tape, qin, p);
}

std::vector<double> Agent::act(const Observation& obs, ActMode mode, Rng& noise_rng) {
  auto x = make_tensor<float>({1, cfg_.frame_stack, cfg_.frame_size, cfg_.frame_size});
  if (!obs.pixels || obs.pixels->numel() != x->numel())
    throw ConfigError("act: observation shape does not match the agent's spec");
  x->data = obs.pixels->data;
  auto z = encode(nullptr, x);
  auto mu = actor_mu(nullptr, z);
  auto bounded = activate<float>(nullptr, mu, Act::tanh);

  std::vector<double> a(static_cast<size_t>(cfg_.action_dim));
  const double sd = sigma(env_step);
  for (int64_t i = 0; i < cfg_.action_dim; ++i) {
    double v = bounded->data[i];
    if (mode == ActMode::explore) {
      const double noise =
          std::clamp(noise_rng.normal() * sd, -static_cast<double>(cfg_.noise_clip),
                     static_cast<double>(cfg_.noise_clip));
      v += noise;
    }
    a[i] = std::clamp(v, -1.0, 1.0);
  }
  return a;
}

TensorPtr<float> Agent::td_target(const Batch& batch, Rng& noise_rng) {
  const int64_t B = batch.obs->dim(0);
  auto z = encode(nullptr, batch.next_obs_n);
  auto mu = actor_mu(nullptr, z);
  auto a = activate<float>(nullptr, mu, Act::tanh);
  const double sd = sigma(env_step);
  for (auto& v : a->data) {
    const double noise = std::clamp(noise_rng.normal() * sd, -static_cast<double>(cfg_.noise_clip),
                                    static_cast<double>(cfg_.noise_clip));
    v = static_cast<float>(std::clamp(static_cast<double>(v) + noise, -1.0, 1.0));
  }
  auto q1 = q_value(nullptr, tq1_, z, a);
  auto q2 = q_value(nullptr, tq2_, z, a);
  auto y = make_tensor<float>({B, 1});
  for (int64_t i = 0; i < B; ++i) {
    const float q = std::min(q1->data[i], q2->data[i]);
    y->data[i] = batch.n_step_reward->data[i] + batch.discount_n->data[i] * q;
  }
  return y;
}

std::vector<Parameter<float>*> Agent::critic_params() {
  auto out = q1_.params();
  for (auto* p : q2_.params()) out.push_back(p);
  return out;
}

std::vector<Parameter<float>*> Agent::target_critic_params() {
  auto out = tq1_.params();
  for (auto* p : tq2_.params()) out.push_back(p);
  return out;
}

std::vector<Parameter<float>*> Agent::all_params() {
  auto out = encoder_.params();
  for (auto* p : actor_.params()) out.push_back(p);
  for (auto* p : critic_params()) out.push_back(p);
  for (auto* p : target_critic_params()) out.push_back(p);
  return out;
}

Parameter<float>* Agent::find_param(const std::string& name) {
  for (auto* p : all_params())
    if (p->name == name) return p;
  return nullptr;
}

float Agent::update_critic(const Batch& batch, Rng& noise_rng) {
  zero_grads(encoder_params());
  zero_grads(critic_params());

  auto y = td_target(batch, noise_rng);

  Tape<float> tape;
  auto z = encode(&tape, batch.obs);
  auto q1 = q_value(&tape, q1_, z, batch.action);
  auto q2 = q_value(&tape, q2_, z, batch.action);
  std::vector<TensorPtr<float>> terms{mse_loss(&tape, q1, y), mse_loss(&tape, q2, y)};

  if (cfg_.l2_init_coef > 0.0f) {
    for (auto* p : q1_.trainable_params())
      terms.push_back(init_drift_penalty(&tape, p->value, p->initial, cfg_.l2_init_coef));
    for (auto* p : q2_.trainable_params())
      terms.push_back(init_drift_penalty(&tape, p->value, p->initial, cfg_.l2_init_coef));
    if (cfg_.l2_init_encoder)
      for (auto* p : encoder_.params())
        terms.push_back(init_drift_penalty(&tape, p->value, p->initial, cfg_.l2_init_coef));
  }

  auto loss = add_scalars(&tape, terms);
  if (!std::isfinite(loss->data[0])) throw RunAborted("critic update: non-finite loss");

  cached_features_ = make_tensor<float>(z->shape);
  cached_features_->data = z->data;

  tape.backward(loss);

  for (auto* p : encoder_.params()) adam_step(*p, cfg_.weight_decay);
  for (auto* p : q1_.trainable_params()) adam_step(*p, cfg_.weight_decay);
  for (auto* p : q2_.trainable_params()) adam_step(*p, cfg_.weight_decay);

  auto online = critic_params();
  auto targets = target_critic_params();
  for (size_t i = 0; i < online.size(); ++i) polyak_update(*targets[i], *online[i], cfg_.tau);

  return loss->data[0];
}

float Agent::update_actor(const Batch& batch) {
  // detached: the critic loss owns the encoder
  return update_actor(batch, encode(nullptr, batch.obs));
}

float Agent::update_actor(const Batch& batch, const TensorPtr<float>& detached_features) {
  zero_grads(actor_params());

  const TensorPtr<float>& z = detached_features;
  if (z->requires_grad) throw ContractViolation("update_actor: features must be detached");
  Tape<float> tape;
  auto mu = actor_mu(&tape, z);
  auto a = activate(&tape, mu, Act::tanh);
  auto q1 = q_value(&tape, q1_, z, a);
  auto q2 = q_value(&tape, q2_, z, a);
  auto qmin = min_elem(&tape, q1, q2);
  auto loss = neg_mean(&tape, qmin);
  if (!std::isfinite(loss->data[0])) throw RunAborted("actor update: non-finite loss");
  tape.backward(loss);

  for (auto* p : actor_.trainable_params()) adam_step(*p, cfg_.weight_decay);
  // The Q forward deposited gradients into critic weights; drop them so the
  // next critic update starts clean.
  zero_grads(critic_params());
  return loss->data[0];
}

StepOutcome train_step(Agent& agent, Observation& obs, TrainStepCtx& ctx) {
  StepOutcome out;

  std::vector<double> action;
  if (agent.env_step < ctx.exploration_steps) {
    action.resize(static_cast<size_t>(agent.config().action_dim));
    for (auto& a : action) a = ctx.noise_rng->uniform(-1.0, 1.0);
  } else {
    action = agent.act(obs, ActMode::explore, *ctx.noise_rng);
  }

  StepResult sr = ctx.env->step(action);
  Transition t;
  t.obs = obs.pixels;
  t.action.assign(action.begin(), action.end());
  t.reward = static_cast<float>(sr.reward);
  t.discount_flag = 1.0f;  // fixed horizon: episode ends are time limits, not deaths
  t.episode_end = sr.done;
  t.next_obs = sr.obs.pixels;
  ctx.buffer->push(t);

  obs = sr.obs;
  agent.env_step += 1;
  out.reward = sr.reward;
  out.done = sr.done;

  if (ctx.buffer->size() < ctx.seed_frames) return out;
  out.trained = true;

  const int k = ctx.rr->updates_due();
  const bool augment_now = ctx.da && da_active(*ctx.da, agent.env_step);
  for (int u = 0; u < k; ++u) {
    auto maybe = ctx.buffer->sample_nstep(ctx.batch_size, ctx.nstep, ctx.gamma, *ctx.sample_rng,
                                          ctx.seed_frames);
    if (!maybe) break;
    Batch batch = *maybe;
    if (augment_now && ctx.da->pad > 0) {
      batch.obs = random_shift(batch.obs, ctx.da->pad, *ctx.augment_rng);
      batch.next_obs_n = random_shift(batch.next_obs_n, ctx.da->pad, *ctx.augment_rng);
    }
    out.critic_loss = agent.update_critic(batch, *ctx.noise_rng);
    out.actor_loss = agent.update_actor(batch, agent.cached_features());
    out.updates += 1;
  }
  return out;
}

}  // namespace vrlab
