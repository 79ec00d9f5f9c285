#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vrlab/plasticity/plasticity.hpp"
#include "vrlab/replay/replay.hpp"

using namespace vrlab;

namespace {

AgentConfig tiny_cfg(bool crelu = false) {
  AgentConfig c;
  c.frame_stack = 2;
  c.frame_size = 16;
  c.action_dim = 2;
  c.features_dim = 8;
  c.hidden_dim = 16;
  c.crelu_critic = crelu;
  return c;
}

EvalBatch random_eval_batch(const AgentConfig& c, int B, uint64_t seed) {
  Rng rng(seed);
  EvalBatch eb;
  eb.obs = make_tensor<float>({B, c.frame_stack, c.frame_size, c.frame_size});
  for (auto& v : eb.obs->data) v = static_cast<float>(rng.randint(256)) / 255.0f;
  eb.action = make_tensor<float>({B, c.action_dim});
  for (auto& v : eb.action->data) v = static_cast<float>(rng.uniform(-1, 1));
  return eb;
}

std::vector<std::vector<float>> values_of(const std::vector<Parameter<float>*>& params) {
  std::vector<std::vector<float>> out;
  for (auto* p : params) out.push_back(p->value->data);
  return out;
}

}  // namespace

TEST_CASE("fau indicator arithmetic on hand-built activations") {
  FauProbe all_pos;
  const float pos[4] = {0.1f, 2.0f, 3.0f, 0.5f};
  all_pos.observe(pos, 4);
  CHECK(fau_from_probe(all_pos, "x") == 1.0);

  FauProbe none;
  const float neg[4] = {-0.1f, 0.0f, -3.0f, 0.0f};
  none.observe(neg, 4);
  CHECK(fau_from_probe(none, "x") == 0.0);

  FauProbe mixed;  // 2 inputs x 2 units, activations [[1,-1],[1,1]]
  const float m[4] = {1.0f, -1.0f, 1.0f, 1.0f};
  mixed.observe(m, 4);
  CHECK(fau_from_probe(mixed, "x") == 0.75);
}

TEST_CASE("a module with no rectified units is a configuration error") {
  FauProbe empty;
  CHECK_THROWS_AS(fau_from_probe(empty, "decoder"), ConfigError);
}

TEST_CASE("measure_fau is side-effect free and repeatable") {
  Rng init(1);
  Agent agent(tiny_cfg(), init);
  auto eb = random_eval_batch(agent.config(), 16, 7);
  auto before = values_of(agent.all_params());
  const double a = measure_fau(ModuleTag::critic, agent, eb);
  const double b = measure_fau(ModuleTag::critic, agent, eb);
  CHECK(a == b);
  CHECK(before == values_of(agent.all_params()));
  CHECK(a >= 0.0);
  CHECK(a <= 1.0);
}

TEST_CASE("crelu critic FAU is exactly one half") {
  Rng init(2);
  Agent agent(tiny_cfg(true), init);
  for (int rep = 0; rep < 10; ++rep) {
    auto eb = random_eval_batch(agent.config(), 16, 100 + rep);
    CHECK(measure_fau(ModuleTag::critic, agent, eb) == 0.5);
  }
}

TEST_CASE("fresh orthogonal relu networks sit near half activation") {
  // zero-mean random inputs through the actor head (two relu layers)
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(50 + rep);
    Mlp<float> head("actor", 8,
                    {{32, Act::relu, false, false}, {32, Act::relu, false, false},
                     {2, Act::identity, false, false}},
                    InitScheme::orthogonal, 1e-4f, rng);
    auto x = make_tensor<float>({64, 8});
    for (auto& v : x->data) v = static_cast<float>(rng.normal());
    FauProbe probe;
    head.forward(nullptr, x, &probe);
    const double phi = fau_from_probe(probe, "actor");
    CHECK(phi > 0.4);
    CHECK(phi < 0.6);
  }
}

TEST_CASE("measure_fau_report covers all three modules and weight norms") {
  Rng init(3);
  Agent agent(tiny_cfg(), init);
  auto eb = random_eval_batch(agent.config(), 8, 9);
  auto rep = measure_fau_report(agent, eb, 1234);
  CHECK(rep.step == 1234);
  for (double phi : {rep.phi_encoder, rep.phi_actor, rep.phi_critic}) {
    CHECK(phi >= 0.0);
    CHECK(phi <= 1.0);
  }
  CHECK(rep.weight_norms.count("encoder") == 1);
  CHECK(rep.weight_norms.count("total") == 1);
}

TEST_CASE("snapshot_weight_norms: norms and the aggregate identity") {
  Rng init(4);
  Agent agent(tiny_cfg(), init);
  // zero everything, then set one critic weight vector to (3,4)
  for (auto* p : agent.all_params()) std::fill(p->value->data.begin(), p->value->data.end(), 0.0f);
  auto norms0 = snapshot_weight_norms(agent);
  CHECK(norms0.at("encoder") == 0.0);
  CHECK(norms0.at("actor") == 0.0);
  CHECK(norms0.at("critic") == 0.0);
  CHECK(norms0.at("total") == 0.0);

  auto* w = agent.find_param("critic.q1.fc0.weight");
  REQUIRE(w != nullptr);
  w->value->data[0] = 3.0f;
  w->value->data[1] = 4.0f;
  auto norms = snapshot_weight_norms(agent);
  CHECK(norms.at("critic") == doctest::Approx(5.0));
  const double expect_total = std::sqrt(std::pow(norms.at("encoder"), 2) +
                                        std::pow(norms.at("actor"), 2) +
                                        std::pow(norms.at("critic"), 2));
  CHECK(norms.at("total") == doctest::Approx(expect_total));
}

TEST_CASE("reset_heads re-draws heads, zeroes their Adam state, spares the rest") {
  Rng init(5);
  Agent agent(tiny_cfg(), init);
  // give the optimizer some state to clear
  auto* head_w = agent.find_param("critic.q1.fc0.weight");
  REQUIRE(head_w != nullptr);
  head_w->adam.m.assign(head_w->adam.m.size(), 0.5f);
  head_w->adam.t = 42;

  auto enc_before = values_of(agent.encoder_params());
  auto head_before = head_w->value->data;
  const auto initial_before = head_w->initial.data;

  Rng irng(6);
  reset_heads(agent, {"actor.", "critic."}, irng);

  CHECK(enc_before == values_of(agent.encoder_params()));
  CHECK(head_w->value->data != head_before);
  CHECK(head_w->initial.data == initial_before);  // the L2-init anchor never moves
  CHECK(head_w->adam.t == 0);
  for (float m : head_w->adam.m) CHECK(m == 0.0f);

  // targets are copies of the new online heads
  auto online = agent.critic_params();
  auto targets = agent.target_critic_params();
  for (size_t i = 0; i < online.size(); ++i)
    CHECK(online[i]->value->data == targets[i]->value->data);

  // biases return to zero, layer-norm-free heads stay consistent
  auto* head_b = agent.find_param("actor.fc0.bias");
  REQUIRE(head_b != nullptr);
  for (float v : head_b->value->data) CHECK(v == 0.0f);
}

TEST_CASE("reset_heads leaves the replay buffer untouched") {
  Rng init(7);
  Agent agent(tiny_cfg(), init);
  ReplayBuffer buf(100, 16, 2, 2);
  Rng rng(8);
  // a tiny finished episode
  std::vector<std::vector<float>> frames;
  for (int i = 0; i < 6; ++i) {
    std::vector<float> f(16 * 16);
    for (auto& v : f) v = static_cast<float>(rng.randint(256)) / 255.0f;
    frames.push_back(std::move(f));
  }
  auto stack = [&](int i) {
    auto t = make_tensor<float>({2, 16, 16});
    const int j0 = std::max(0, i - 1);
    std::copy(frames[j0].begin(), frames[j0].end(), t->data.begin());
    std::copy(frames[i].begin(), frames[i].end(), t->data.begin() + 16 * 16);
    return t;
  };
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.obs = stack(i);
    t.next_obs = stack(i + 1);
    t.action = {0.1f, -0.2f};
    t.reward = static_cast<float>(i);
    t.episode_end = i == 4;
    buf.push(t);
  }
  ReplayBuffer::Window before;
  REQUIRE(buf.try_window(1, 3, 0.99f, before));
  Rng irng(9);
  reset_heads(agent, {"critic."}, irng);
  ReplayBuffer::Window after;
  REQUIRE(buf.try_window(1, 3, 0.99f, after));
  CHECK(buf.size() == 5);
  CHECK(before.obs == after.obs);
  CHECK(before.n_step_reward == after.n_step_reward);
}

TEST_CASE("reset_heads with a pattern that matches nothing is a config error") {
  Rng init(10);
  Agent agent(tiny_cfg(), init);
  Rng irng(11);
  CHECK_THROWS_AS(reset_heads(agent, {"decoder."}, irng), ConfigError);
}

TEST_CASE("plasticity injection preserves outputs and freezes theta, theta'2") {
  Rng init(12);
  Agent agent(tiny_cfg(), init);
  auto eb = random_eval_batch(agent.config(), 100, 13);

  auto z = agent.encode(nullptr, eb.obs);
  auto q_before = agent.q_value(nullptr, agent.critic1(), z, eb.action);
  auto tq_before = agent.q_value(nullptr, agent.target_critic1(), z, eb.action);

  Rng irng(14);
  inject_plasticity(agent, "critic", irng);

  auto q_after = agent.q_value(nullptr, agent.critic1(), z, eb.action);
  auto tq_after = agent.q_value(nullptr, agent.target_critic1(), z, eb.action);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::fabs(q_after->data[i] - q_before->data[i]) <= 1e-6);
    CHECK(std::fabs(tq_after->data[i] - tq_before->data[i]) <= 1e-6);
  }

  // frozen pieces take no gradient steps
  auto frozen_base = values_of(agent.critic1().base().params());
  auto frozen_twin = values_of(agent.critic1().inj2().params());
  Rng brng(15);
  Batch b;
  b.obs = eb.obs;
  b.next_obs_n = eb.obs;
  b.action = eb.action;
  b.n_step_reward = make_tensor<float>({100}, 0.3f);
  b.discount_n = make_tensor<float>({100}, 0.9f);
  Rng noise(16);
  for (int step = 0; step < 5; ++step) {
    agent.update_critic(b, noise);
    agent.update_actor(b, agent.cached_features());
  }
  CHECK(frozen_base == values_of(agent.critic1().base().params()));
  CHECK(frozen_twin == values_of(agent.critic1().inj2().params()));
  // and the trainable fresh copy did move
  CHECK(values_of(agent.critic1().inj1().params()) != values_of(agent.critic1().inj2().params()));

  Rng irng2(17);
  CHECK_THROWS_AS(inject_plasticity(agent, "critic", irng2), ConfigError);
}

TEST_CASE("combined-head gradient w.r.t. the fresh copy equals a standalone head's") {
  Rng rng(18);
  Mlp<double> base("head", 4, {{6, Act::relu, false, false}, {1, Act::identity, false, false}},
                   InitScheme::orthogonal, 1e-4, rng);
  HeadEnsemble<double> ens(base.clone("head", false, nullptr));
  Rng frng(19);
  auto fresh = base.clone("head.fresh", true, &frng);
  ens.inject(fresh);

  auto standalone = fresh.clone("solo", false, nullptr);

  auto x = make_tensor<double>({5, 4});
  Rng xr(20);
  for (auto& v : x->data) v = xr.uniform(-1, 1);
  auto target = make_tensor<double>({5, 1});
  for (auto& v : target->data) v = xr.uniform(-1, 1);

  Tape<double> t1;
  auto l1 = mse_loss(&t1, ens.forward(&t1, x), target);
  t1.backward(l1);

  // the standalone head differs from the ensemble by a constant, so shifting
  // the target by that constant reproduces the same loss surface in theta'1
  Tape<double> t0;
  auto base_out = ens.base().forward(nullptr, x);
  auto twin_out = ens.inj2().forward(nullptr, x);
  auto shifted = make_tensor<double>({5, 1});
  for (int i = 0; i < 5; ++i)
    shifted->data[i] = target->data[i] - base_out->data[i] + twin_out->data[i];
  auto l0 = mse_loss(&t0, standalone.forward(&t0, x), shifted);
  t0.backward(l0);

  auto got = ens.inj1().params();
  auto want = standalone.params();
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    REQUIRE(got[i]->value->has_grad());
    for (int64_t k = 0; k < got[i]->value->numel(); ++k)
      CHECK(got[i]->value->grad[k] == doctest::Approx(want[i]->value->grad[k]).epsilon(1e-9));
  }
}

TEST_CASE("actor injection preserves the policy output") {
  Rng init(21);
  Agent agent(tiny_cfg(), init);
  auto eb = random_eval_batch(agent.config(), 50, 22);
  auto z = agent.encode(nullptr, eb.obs);
  auto mu_before = agent.actor_mu(nullptr, z);
  Rng irng(23);
  inject_plasticity(agent, "actor", irng);
  auto mu_after = agent.actor_mu(nullptr, z);
  for (int64_t i = 0; i < mu_before->numel(); ++i)
    CHECK(std::fabs(mu_after->data[i] - mu_before->data[i]) <= 1e-6);
}

TEST_CASE("shrink_and_perturb: zeroed fresh draw is exact alpha scaling") {
  Rng init(24);
  Agent agent(tiny_cfg(), init);
  auto* w = agent.find_param("critic.q1.fc0.weight");
  REQUIRE(w != nullptr);
  auto before = w->value->data;
  Rng irng(25);
  shrink_and_perturb(agent, {"critic."}, 0.8, irng, /*zero_fresh=*/true);
  for (int64_t i = 0; i < w->value->numel(); ++i)
    CHECK(w->value->data[i] == 0.8f * before[i]);

  // alpha = 1 with zero fresh draw is the identity
  auto snap = w->value->data;
  Rng irng2(26);
  shrink_and_perturb(agent, {"critic."}, 1.0, irng2, /*zero_fresh=*/true);
  CHECK(w->value->data == snap);

  Rng irng3(27);
  CHECK_THROWS_AS(shrink_and_perturb(agent, {"nothing."}, 0.8, irng3), ConfigError);
}

TEST_CASE("shrink_and_perturb on zero weights reproduces the init distribution (KS)") {
  Rng init(28);
  Agent agent(tiny_cfg(), init);
  auto* w = agent.find_param("critic.q1.fc1.weight");
  REQUIRE(w != nullptr);
  std::fill(w->value->data.begin(), w->value->data.end(), 0.0f);
  Rng irng(29);
  shrink_and_perturb(agent, {"critic.q1.fc1.weight"}, 0.8, irng);
  std::vector<float> got = w->value->data;

  Rng direct(30);
  auto fresh = init_layer<float>(w->value->shape, InitScheme::orthogonal, direct);
  std::vector<float> want = fresh.data;

  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  // two-sample Kolmogorov-Smirnov at alpha = 0.001
  const size_t n = got.size(), m = want.size();
  double d = 0;
  size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (got[i] <= want[j]) ++i;
    else ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double crit = 1.949 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
  CHECK(d < crit);
}

TEST_CASE("l2_init penalty: zero at the anchor, closed form away from it") {
  Parameter<double> p("w", Tensor<double>({1}, 5.0), 1e-4);
  CHECK(l2_init_penalty<double>({&p}, 0.01) == 0.0);

  p.value->data[0] = 7.0;  // theta - theta0 = 2
  CHECK(l2_init_penalty<double>({&p}, 0.01) == doctest::Approx(0.04));

  // taped gradient: d/dtheta coef*(theta-theta0)^2 = 2*coef*delta = 0.04
  Tape<double> tape;
  p.value->requires_grad = true;
  auto pen = init_drift_penalty<double>(&tape, p.value, p.initial, 0.01);
  CHECK(pen->data[0] == doctest::Approx(0.04));
  tape.backward(pen);
  CHECK(p.value->grad[0] == doctest::Approx(0.04));
}
