#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vrlab/agent/agent.hpp"
#include "vrlab/agent/checkpoint.hpp"
#include "vrlab/errors.hpp"

using namespace vrlab;

namespace {

AgentConfig tiny_cfg() {
  AgentConfig c;
  c.frame_stack = 2;
  c.frame_size = 16;
  c.action_dim = 2;
  c.features_dim = 8;
  c.hidden_dim = 16;
  c.stddev_horizon = 1000;
  return c;
}

EnvSpec tiny_env_spec() {
  EnvSpec s;
  s.name = "pointmass";
  s.frame_size = 16;
  s.frame_stack = 2;
  s.action_repeat = 2;
  s.episode_len = 20;
  return s;
}

Batch tiny_batch(Agent& agent, int B, Rng& rng) {
  Batch b;
  b.obs = make_tensor<float>({B, agent.config().frame_stack, 16, 16});
  b.next_obs_n = make_tensor<float>({B, agent.config().frame_stack, 16, 16});
  for (auto& v : b.obs->data) v = static_cast<float>(rng.randint(256)) / 255.0f;
  for (auto& v : b.next_obs_n->data) v = static_cast<float>(rng.randint(256)) / 255.0f;
  b.action = make_tensor<float>({B, 2});
  for (auto& v : b.action->data) v = static_cast<float>(rng.uniform(-1, 1));
  b.n_step_reward = make_tensor<float>({B}, 0.5f);
  b.discount_n = make_tensor<float>({B}, 0.970299f);
  return b;
}

void force_constant_head(Agent& agent, const std::string& prefix, float value) {
  auto* w = agent.find_param(prefix + ".fc2.weight");
  auto* b = agent.find_param(prefix + ".fc2.bias");
  REQUIRE(w != nullptr);
  REQUIRE(b != nullptr);
  std::fill(w->value->data.begin(), w->value->data.end(), 0.0f);
  std::fill(b->value->data.begin(), b->value->data.end(), value);
}

std::vector<std::vector<float>> snapshot(const std::vector<Parameter<float>*>& params) {
  std::vector<std::vector<float>> out;
  for (auto* p : params) out.push_back(p->value->data);
  return out;
}

bool equal_snapshot(const std::vector<std::vector<float>>& snap,
                    const std::vector<Parameter<float>*>& params) {
  if (snap.size() != params.size()) return false;
  for (size_t i = 0; i < snap.size(); ++i)
    if (snap[i] != params[i]->value->data) return false;
  return true;
}

}  // namespace

TEST_CASE("exploration stddev follows the linear schedule") {
  Rng init(1);
  Agent agent(tiny_cfg(), init);
  CHECK(agent.sigma(0) == doctest::Approx(1.0));
  CHECK(agent.sigma(500) == doctest::Approx(0.55));
  CHECK(agent.sigma(1000) == doctest::Approx(0.1));
  CHECK(agent.sigma(5000) == doctest::Approx(0.1));
}

TEST_CASE("eval actions are deterministic; explore actions stay in [-1,1]") {
  Rng init(2);
  Agent agent(tiny_cfg(), init);
  auto env = make_env(tiny_env_spec());
  Observation obs = env->reset(3);

  Rng unused(0);
  auto a1 = agent.act(obs, ActMode::eval, unused);
  auto a2 = agent.act(obs, ActMode::eval, unused);
  CHECK(a1 == a2);

  Rng noise(7);
  for (int i = 0; i < 10000; ++i) {
    auto a = agent.act(obs, ActMode::explore, noise);
    for (double v : a) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("td_target: zero bootstrap discount returns the n-step reward exactly") {
  Rng init(3);
  Agent agent(tiny_cfg(), init);
  Rng rng(5);
  Batch b = tiny_batch(agent, 4, rng);
  std::fill(b.discount_n->data.begin(), b.discount_n->data.end(), 0.0f);
  Rng noise(9);
  auto y = agent.td_target(b, noise);
  for (int i = 0; i < 4; ++i) CHECK(y->data[i] == b.n_step_reward->data[i]);
}

TEST_CASE("td_target: bootstraps from the minimum of the twin target critics") {
  Rng init(4);
  Agent agent(tiny_cfg(), init);
  force_constant_head(agent, "target_critic.q1", 2.0f);
  force_constant_head(agent, "target_critic.q2", 5.0f);
  Rng rng(6);
  Batch b = tiny_batch(agent, 3, rng);
  std::fill(b.n_step_reward->data.begin(), b.n_step_reward->data.end(), 1.0f);
  std::fill(b.discount_n->data.begin(), b.discount_n->data.end(), 0.970299f);
  Rng noise(10);
  auto y = agent.td_target(b, noise);
  for (int i = 0; i < 3; ++i) CHECK(y->data[i] == doctest::Approx(2.940598).epsilon(1e-6));
}

TEST_CASE("td_target matches a hand-rolled recomputation on a tiny batch") {
  Rng init(5);
  Agent agent(tiny_cfg(), init);
  Rng rng(8);
  Batch b = tiny_batch(agent, 5, rng);

  Rng noise_a(21);
  Rng noise_b = noise_a;  // identical stream for the oracle
  auto y = agent.td_target(b, noise_a);

  auto z = agent.encode(nullptr, b.next_obs_n);
  auto mu = agent.actor_mu(nullptr, z);
  auto a = activate<float>(nullptr, mu, Act::tanh);
  const double sd = agent.sigma(agent.env_step);
  const double clip = static_cast<double>(agent.config().noise_clip);
  for (auto& v : a->data) {
    const double n = std::clamp(noise_b.normal() * sd, -clip, clip);
    v = static_cast<float>(std::clamp(static_cast<double>(v) + n, -1.0, 1.0));
  }
  auto q1 = agent.q_value(nullptr, agent.target_critic1(), z, a);
  auto q2 = agent.q_value(nullptr, agent.target_critic2(), z, a);
  for (int i = 0; i < 5; ++i) {
    const float want = b.n_step_reward->data[i] +
                       b.discount_n->data[i] * std::min(q1->data[i], q2->data[i]);
    CHECK(y->data[i] == want);
  }
}

TEST_CASE("update_critic: heads already equal to the target give zero loss and move nothing") {
  Rng init(6);
  Agent agent(tiny_cfg(), init);
  force_constant_head(agent, "critic.q1", 0.75f);
  force_constant_head(agent, "critic.q2", 0.75f);
  Rng rng(9);
  Batch b = tiny_batch(agent, 4, rng);
  std::fill(b.n_step_reward->data.begin(), b.n_step_reward->data.end(), 0.75f);
  std::fill(b.discount_n->data.begin(), b.discount_n->data.end(), 0.0f);

  auto before = snapshot(agent.critic_params());
  auto before_enc = snapshot(agent.encoder_params());
  Rng noise(11);
  const float loss = agent.update_critic(b, noise);
  CHECK(loss == 0.0f);
  CHECK(equal_snapshot(before, agent.critic_params()));
  CHECK(equal_snapshot(before_enc, agent.encoder_params()));
}

TEST_CASE("update_critic: encoder trains, actor does not") {
  Rng init(7);
  Agent agent(tiny_cfg(), init);
  Rng rng(10);
  Batch b = tiny_batch(agent, 4, rng);
  auto before_enc = snapshot(agent.encoder_params());
  auto before_actor = snapshot(agent.actor_params());
  Rng noise(12);
  const float loss = agent.update_critic(b, noise);
  CHECK(loss > 0.0f);
  CHECK_FALSE(equal_snapshot(before_enc, agent.encoder_params()));
  CHECK(equal_snapshot(before_actor, agent.actor_params()));
}

TEST_CASE("update_critic: targets move toward the online critics by tau") {
  Rng init(8);
  Agent agent(tiny_cfg(), init);
  Rng rng(11);
  Batch b = tiny_batch(agent, 4, rng);
  // targets start as exact copies
  auto online = agent.critic_params();
  auto targets = agent.target_critic_params();
  for (size_t i = 0; i < online.size(); ++i)
    CHECK(online[i]->value->data == targets[i]->value->data);
  Rng noise(13);
  agent.update_critic(b, noise);
  // after: target = tau*new_online + (1-tau)*old_online, so target != online
  bool any_diff = false;
  for (size_t i = 0; i < online.size(); ++i)
    any_diff = any_diff || online[i]->value->data != targets[i]->value->data;
  CHECK(any_diff);
}

TEST_CASE("update_actor: constant critic means zero actor gradient and no movement") {
  Rng init(9);
  Agent agent(tiny_cfg(), init);
  force_constant_head(agent, "critic.q1", 3.0f);
  force_constant_head(agent, "critic.q2", 3.0f);
  Rng rng(12);
  Batch b = tiny_batch(agent, 4, rng);
  auto before = snapshot(agent.actor_params());
  const float loss = agent.update_actor(b);
  CHECK(loss == doctest::Approx(-3.0f));
  CHECK(equal_snapshot(before, agent.actor_params()));
}

TEST_CASE("update_actor: encoder and critic values are untouched") {
  Rng init(10);
  Agent agent(tiny_cfg(), init);
  Rng rng(13);
  Batch b = tiny_batch(agent, 4, rng);
  auto before_enc = snapshot(agent.encoder_params());
  auto before_critic = snapshot(agent.critic_params());
  auto before_actor = snapshot(agent.actor_params());
  agent.update_actor(b);
  CHECK(equal_snapshot(before_enc, agent.encoder_params()));
  CHECK(equal_snapshot(before_critic, agent.critic_params()));
  CHECK_FALSE(equal_snapshot(before_actor, agent.actor_params()));
  // and critic gradients were cleaned up afterwards
  for (auto* p : agent.critic_params())
    if (p->value->has_grad())
      for (float g : p->value->grad) CHECK(g == 0.0f);
}

TEST_CASE("train_step: replay-ratio accumulator releases exact update counts") {
  struct Case {
    double rr;
    int64_t expect;
  };
  // training becomes active once the buffer holds seed_frames transitions
  const int64_t total = 100, seed_frames = 8;
  const int64_t active = total - seed_frames + 1;  // updates_due called per active step
  for (const Case c : {Case{0.5, active / 2}, Case{1.0, active}, Case{2.0, 2 * active}}) {
    Rng init(11);
    Agent agent(tiny_cfg(), init);
    auto env = make_env(tiny_env_spec());
    ReplayBuffer buffer(1000, 16, 2, 2);
    RRController rr = RRController::fixed_rr(c.rr);
    ShiftAugmentConfig da;
    da.enabled = false;
    Rng noise(1), aug(2), sample(3), envr(4);
    TrainStepCtx ctx;
    ctx.buffer = &buffer;
    ctx.env = env.get();
    ctx.rr = &rr;
    ctx.da = &da;
    ctx.noise_rng = &noise;
    ctx.augment_rng = &aug;
    ctx.sample_rng = &sample;
    ctx.batch_size = 4;
    ctx.nstep = 3;
    ctx.gamma = 0.99f;
    ctx.seed_frames = seed_frames;
    ctx.exploration_steps = 4;

    Observation obs = env->reset(envr.next_u64());
    int64_t updates = 0;
    for (int64_t t = 0; t < total; ++t) {
      auto out = train_step(agent, obs, ctx);
      updates += out.updates;
      if (out.done) obs = env->reset(envr.next_u64());
    }
    CHECK(updates == c.expect);
  }
}

TEST_CASE("train_step trajectories are bit-reproducible for equal seeds") {
  auto run = [] {
    Rng init(42);
    Agent agent(tiny_cfg(), init);
    auto env = make_env(tiny_env_spec());
    ReplayBuffer buffer(1000, 16, 2, 2);
    RRController rr = RRController::fixed_rr(1.0);
    ShiftAugmentConfig da;  // enabled, pad 1 exercises the augment stream
    da.pad = 1;
    Rng noise(1), aug(2), sample(3), envr(4);
    TrainStepCtx ctx;
    ctx.buffer = &buffer;
    ctx.env = env.get();
    ctx.rr = &rr;
    ctx.da = &da;
    ctx.noise_rng = &noise;
    ctx.augment_rng = &aug;
    ctx.sample_rng = &sample;
    ctx.batch_size = 4;
    ctx.nstep = 3;
    ctx.gamma = 0.99f;
    ctx.seed_frames = 8;
    ctx.exploration_steps = 4;
    Observation obs = env->reset(envr.next_u64());
    for (int t = 0; t < 60; ++t) {
      auto out = train_step(agent, obs, ctx);
      if (out.done) obs = env->reset(envr.next_u64());
    }
    std::vector<std::vector<float>> snap;
    for (auto* p : agent.all_params()) snap.push_back(p->value->data);
    return snap;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint: save/load roundtrip restores every parameter and counter") {
  Rng init(12);
  Agent agent(tiny_cfg(), init);
  Rng rng(14);
  Batch b = tiny_batch(agent, 4, rng);
  Rng noise(15);
  agent.update_critic(b, noise);
  agent.update_actor(b);
  agent.env_step = 777;

  const std::string path = "/tmp/vrlab_ckpt_test.bin";
  save_checkpoint(agent, path);
  const auto data = read_checkpoint(path);
  CHECK(data.env_step == 777);
  CHECK(data.entries.size() == agent.all_params().size());

  Rng init2(999);  // different initialization, then restore
  Agent other(tiny_cfg(), init2);
  load_checkpoint(other, data);
  CHECK(other.env_step == 777);
  auto pa = agent.all_params();
  auto pb = other.all_params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value->data == pb[i]->value->data);
    CHECK(pa[i]->adam.m == pb[i]->adam.m);
    CHECK(pa[i]->adam.t == pb[i]->adam.t);
  }
  std::remove(path.c_str());
}

TEST_CASE("parameter names are unique within one agent") {
  Rng init(13);
  Agent agent(tiny_cfg(), init);
  std::set<std::string> names;
  for (auto* p : agent.all_params()) {
    CHECK(names.insert(p->name).second);
  }
}
