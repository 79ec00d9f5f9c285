// Acceptance suite: one line per criterion, exit 0 only if every required
// criterion holds. The two directional smoke comparisons (10a, 10b) are
// reported as experiment outcomes; the mechanism checks must pass.

#include <sys/resource.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "gradcheck_suites.hpp"
#include "vrlab/adaptive_rr/controller.hpp"
#include "vrlab/agent/agent.hpp"
#include "vrlab/harness/config.hpp"
#include "vrlab/harness/experiment.hpp"
#include "vrlab/harness/plot.hpp"
#include "vrlab/plasticity/plasticity.hpp"
#include "vrlab/replay/replay.hpp"

using namespace vrlab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, bool required = true) {
  std::printf("[%s] criterion %2d: %-28s %s%s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(),
              !pass && !required ? " (reported as experiment outcome; not gating)" : "");
  std::fflush(stdout);
  if (!pass && required) g_failures += 1;
}

double cpu_seconds() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return u.ru_utime.tv_sec + 1e-6 * u.ru_utime.tv_usec + u.ru_stime.tv_sec +
         1e-6 * u.ru_stime.tv_usec;
}

AgentConfig tiny_agent_cfg(bool crelu = false) {
  AgentConfig c;
  c.frame_stack = 2;
  c.frame_size = 16;
  c.action_dim = 2;
  c.features_dim = 8;
  c.hidden_dim = 16;
  c.crelu_critic = crelu;
  return c;
}

EvalBatch random_eval_batch(const AgentConfig& c, int B, uint64_t seed, bool zero_mean = false) {
  Rng rng(seed);
  EvalBatch eb;
  eb.obs = make_tensor<float>({B, c.frame_stack, c.frame_size, c.frame_size});
  for (auto& v : eb.obs->data)
    v = zero_mean ? static_cast<float>(rng.normal()) : static_cast<float>(rng.randint(256)) / 255.0f;
  eb.action = make_tensor<float>({B, c.action_dim});
  for (auto& v : eb.action->data) v = static_cast<float>(rng.uniform(-1, 1));
  return eb;
}

Batch batch_from_eval(const EvalBatch& eb, float reward, float discount) {
  Batch b;
  b.obs = eb.obs;
  b.next_obs_n = eb.obs;
  b.action = eb.action;
  const int64_t B = eb.obs->dim(0);
  b.n_step_reward = make_tensor<float>({B}, reward);
  b.discount_n = make_tensor<float>({B}, discount);
  return b;
}

// ---- criterion 1 ----------------------------------------------------------
void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cases = vrlab::test::run_gradcheck_suites(20, 20240808);
  int failed = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    if (!c.result.ok) failed += 1;
    if (c.result.worst > worst) {
      worst = c.result.worst;
      worst_name = c.name;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << cases.size() << " checks, worst rel err " << worst << " (" << worst_name << "), "
    << secs << "s";
  report(1, "gradient soundness", failed == 0 && secs < 60.0, d.str());
}

// ---- criterion 2 ----------------------------------------------------------
void criterion_injection_identity() {
  Rng init(1);
  Agent agent(tiny_agent_cfg(), init);
  auto eb = random_eval_batch(agent.config(), 100, 2);
  auto z = agent.encode(nullptr, eb.obs);
  auto before1 = agent.q_value(nullptr, agent.critic1(), z, eb.action);
  auto before2 = agent.q_value(nullptr, agent.critic2(), z, eb.action);

  Rng irng(3);
  inject_plasticity(agent, "critic", irng);

  auto after1 = agent.q_value(nullptr, agent.critic1(), z, eb.action);
  auto after2 = agent.q_value(nullptr, agent.critic2(), z, eb.action);
  double max_dev = 0.0;
  for (int i = 0; i < 100; ++i) {
    max_dev = std::max(max_dev, std::fabs(static_cast<double>(after1->data[i]) - before1->data[i]));
    max_dev = std::max(max_dev, std::fabs(static_cast<double>(after2->data[i]) - before2->data[i]));
  }

  auto bytes_of = [](std::vector<Parameter<float>*> ps) {
    std::vector<std::vector<float>> out;
    for (auto* p : ps) out.push_back(p->value->data);
    return out;
  };
  const auto frozen_theta = bytes_of(agent.critic1().base().params());
  const auto frozen_twin = bytes_of(agent.critic1().inj2().params());

  Rng brng(4), noise(5);
  for (int step = 0; step < 100; ++step) {
    auto eb2 = random_eval_batch(agent.config(), 8, 100 + step);
    Batch b = batch_from_eval(eb2, 0.4f, 0.9f);
    agent.update_critic(b, noise);
    agent.update_actor(b, agent.cached_features());
  }
  const bool frozen_ok = frozen_theta == bytes_of(agent.critic1().base().params()) &&
                         frozen_twin == bytes_of(agent.critic1().inj2().params());

  std::ostringstream d;
  d << "max output deviation " << max_dev << ", frozen pieces "
    << (frozen_ok ? "bit-unchanged" : "MOVED") << " after 100 gradient steps";
  report(2, "plasticity-injection identity", max_dev <= 1e-6 && frozen_ok, d.str());
}

// ---- criterion 3 ----------------------------------------------------------
void criterion_crelu_pairing() {
  Rng init(6);
  Agent agent(tiny_agent_cfg(true), init);
  int exact = 0;
  for (int rep = 0; rep < 50; ++rep) {
    auto eb = random_eval_batch(agent.config(), 32, 1000 + rep);
    if (measure_fau(ModuleTag::critic, agent, eb) == 0.5) exact += 1;
  }
  std::ostringstream d;
  d << exact << "/50 batches at exactly 0.5";
  report(3, "crelu pairing", exact == 50, d.str());
}

// ---- criterion 4 ----------------------------------------------------------
void criterion_fresh_fau() {
  double lo = 1.0, hi = 0.0;
  int inside = 0;
  const int inits = 100;
  AgentConfig cfg;
  cfg.frame_stack = 3;
  cfg.frame_size = 32;
  cfg.action_dim = 2;
  cfg.features_dim = 50;
  cfg.hidden_dim = 256;
  for (int rep = 0; rep < inits; ++rep) {
    Rng init(5000 + rep);
    Agent agent(cfg, init);
    auto eb = random_eval_batch(cfg, 64, 9000 + rep, /*zero_mean=*/true);
    for (ModuleTag tag : {ModuleTag::encoder, ModuleTag::actor, ModuleTag::critic}) {
      const double phi = measure_fau(tag, agent, eb);
      lo = std::min(lo, phi);
      hi = std::max(hi, phi);
      if (phi >= 0.4 && phi <= 0.6) inside += 1;
    }
  }
  std::ostringstream d;
  d << inside << "/" << inits * 3 << " module measurements inside [0.4,0.6], range [" << lo << ", "
    << hi << "]";
  report(4, "fresh-network FAU", inside == inits * 3, d.str());
}

// ---- criterion 5 ----------------------------------------------------------
void criterion_nstep_oracle() {
  const int F = 4, S = 3, A = 2;
  ReplayBuffer buf(200000, F, S, A);
  Rng rng(7);

  struct Raw {
    std::vector<std::vector<float>> frames, actions;
    std::vector<float> rewards;
    std::vector<bool> terminal;
  };
  auto grid_frame = [&](Rng& r) {
    std::vector<float> f(F * F);
    for (auto& v : f) v = static_cast<float>(r.randint(256)) / 255.0f;
    return f;
  };
  auto stack_at = [&](const std::vector<std::vector<float>>& frames, int i) {
    auto t = make_tensor<float>({S, F, F});
    for (int s = 0; s < S; ++s) {
      const int j = std::max(0, i - (S - 1 - s));
      std::copy(frames[j].begin(), frames[j].end(), t->data.begin() + s * F * F);
    }
    return t;
  };

  std::vector<Raw> episodes;
  for (int e = 0; e < 1000; ++e) {
    Raw ep;
    const int len = 3 + static_cast<int>(rng.randint(8));
    ep.frames.push_back(grid_frame(rng));
    for (int i = 0; i < len; ++i) {
      ep.frames.push_back(grid_frame(rng));
      ep.actions.push_back({static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))});
      ep.rewards.push_back(static_cast<float>(rng.uniform(0, 1)));
      ep.terminal.push_back(false);
    }
    if (rng.uniform() < 0.3) ep.terminal.back() = true;
    for (int i = 0; i < len; ++i) {
      Transition t;
      t.obs = stack_at(ep.frames, i);
      t.next_obs = stack_at(ep.frames, i + 1);
      t.action = ep.actions[i];
      t.reward = ep.rewards[i];
      t.discount_flag = ep.terminal[i] ? 0.0f : 1.0f;
      t.episode_end = i == len - 1;
      buf.push(t);
    }
    episodes.push_back(std::move(ep));
  }

  const int n = 3;
  const float gamma = 0.99f;
  int64_t serial = 0;
  int64_t mismatches = 0, checked = 0;
  for (const auto& ep : episodes) {
    const int len = static_cast<int>(ep.rewards.size());
    for (int i = 0; i < len; ++i, ++serial) {
      ReplayBuffer::Window got;
      if (!buf.try_window(serial, n, gamma, got)) {
        mismatches += 1;
        continue;
      }
      const int m = std::min(n, len - i);
      float reward = 0.0f, disc = 1.0f;
      int used = 0;
      bool term = false;
      for (int j = 0; j < m; ++j) {
        reward += disc * ep.rewards[i + j];
        disc *= gamma;
        used = j + 1;
        if (ep.terminal[i + j]) {
          term = true;
          break;
        }
      }
      const bool ok = got.n_step_reward == reward && got.discount_n == (term ? 0.0f : disc) &&
                      got.obs == stack_at(ep.frames, i)->data &&
                      got.next_obs == stack_at(ep.frames, i + used)->data &&
                      got.action == ep.actions[i];
      if (!ok) mismatches += 1;
      checked += 1;
    }
  }
  std::ostringstream d;
  d << checked << " windows over 1000 episodes, " << mismatches << " mismatches (exact compare)";
  report(5, "n-step oracle", mismatches == 0 && checked == buf.size(), d.str());
}

// ---- criterion 6 ----------------------------------------------------------
void criterion_rr_conservation() {
  const double ratios[] = {0.5, 0.75, 1.0, 2.0, 4.0};
  const int64_t expected[] = {5000, 7500, 10000, 20000, 40000};
  bool ok = true;
  std::ostringstream d;
  for (int i = 0; i < 5; ++i) {
    auto c = RRController::fixed_rr(ratios[i]);
    int64_t total = 0;
    for (int s = 0; s < 10000; ++s) total += c.updates_due();
    ok = ok && total == expected[i];
    d << "rr=" << ratios[i] << "->" << total << (i < 4 ? ", " : "");
  }
  report(6, "rr accumulator conservation", ok, d.str());
}

// ---- criterion 7 ----------------------------------------------------------
void criterion_controller_table() {
  struct Case {
    const char* name;
    std::vector<double> phis;                 // fed at 10k-step checkpoints from 20k
    std::optional<size_t> switch_at;          // index into phis where the switch lands
  };
  const std::vector<Case> table = {
      {"plateau after rise", {0.20, 0.35, 0.45, 0.4505}, 3},
      {"plateau after overshoot", {0.30, 0.50, 0.44, 0.4405}, 3},
      {"never plateaus", {0.10, 0.13, 0.16, 0.19, 0.22, 0.25}, std::nullopt},
      {"immediate plateau", {0.40, 0.4009}, 1},
      {"exactly epsilon gap holds", {0.40, 0.401, 0.402, 0.403}, std::nullopt},
      {"just below epsilon", {0.40, 0.40099}, 1},
      {"oscillation", {0.2, 0.6, 0.2, 0.6, 0.2, 0.6}, std::nullopt},
      {"slow drift above eps", {0.40, 0.4011, 0.4022, 0.4033, 0.4044}, std::nullopt},
      {"v-shape with flat bottom", {0.50, 0.30, 0.3005, 0.60}, 2},
      {"flat after long climb", {0.1, 0.2, 0.3, 0.4, 0.5, 0.5004}, 5},
      {"plateau at zero", {0.0, 0.0}, 1},
      {"plateau at one", {1.0, 0.9995}, 1},
  };
  bool all_ok = true;
  std::string failing;
  for (const auto& c : table) {
    auto ctl = RRController::adaptive(0.5, 2.0, 0.001, 10000, 20000);
    std::optional<size_t> switched_at;
    for (size_t i = 0; i < c.phis.size(); ++i) {
      const auto dec = ctl.observe_fau(20000 + static_cast<int64_t>(i) * 10000, c.phis[i]);
      if (dec == RRController::Decision::switch_to_high && !switched_at) switched_at = i;
    }
    bool ok = switched_at == c.switch_at;
    if (ok && switched_at) {
      // the latch: replay more checkpoints, nothing may change
      ok = ctl.observe_fau(990000, 0.0) == RRController::Decision::keep && ctl.rr_current() == 2.0 &&
           ctl.switched();
    }
    if (ok && !switched_at) ok = !ctl.switched() && ctl.rr_current() == 0.5;
    if (!ok) {
      all_ok = false;
      failing += std::string(failing.empty() ? "" : ", ") + c.name;
    }
  }
  std::ostringstream d;
  d << table.size() << " synthetic sequences";
  if (!all_ok) d << "; failing: " << failing;
  report(7, "controller state machine", all_ok, d.str());
}

// ---- criterion 8 ----------------------------------------------------------
void criterion_intervention_safety() {
  bool ok = true;
  std::string detail;

  {  // reset preserves buffer and encoder bit-exactly
    Rng init(8);
    Agent agent(tiny_agent_cfg(), init);
    ReplayBuffer buf(100, 16, 2, 2);
    Rng rng(9);
    std::vector<std::vector<float>> frames;
    for (int i = 0; i < 7; ++i) {
      std::vector<float> f(16 * 16);
      for (auto& v : f) v = static_cast<float>(rng.randint(256)) / 255.0f;
      frames.push_back(std::move(f));
    }
    auto stack = [&](int i) {
      auto t = make_tensor<float>({2, 16, 16});
      const int j0 = std::max(0, i - 1);
      std::copy(frames[j0].begin(), frames[j0].end(), t->data.begin());
      std::copy(frames[i].begin(), frames[i].end(), t->data.begin() + 256);
      return t;
    };
    for (int i = 0; i < 6; ++i) {
      Transition t;
      t.obs = stack(i);
      t.next_obs = stack(i + 1);
      t.action = {0.5f, -0.5f};
      t.reward = 0.1f * i;
      t.episode_end = i == 5;
      buf.push(t);
    }
    std::vector<ReplayBuffer::Window> before;
    for (int64_t s = 0; s < buf.size(); ++s) {
      ReplayBuffer::Window w;
      if (buf.try_window(s, 3, 0.99f, w)) before.push_back(w);
    }
    std::vector<std::vector<float>> enc_before;
    for (auto* p : agent.encoder_params()) enc_before.push_back(p->value->data);
    auto* head = agent.find_param("critic.q1.fc0.weight");
    const auto head_before = head->value->data;

    Rng irng(10);
    reset_heads(agent, {"actor.", "critic."}, irng);

    std::vector<ReplayBuffer::Window> after;
    for (int64_t s = 0; s < buf.size(); ++s) {
      ReplayBuffer::Window w;
      if (buf.try_window(s, 3, 0.99f, w)) after.push_back(w);
    }
    std::vector<std::vector<float>> enc_after;
    for (auto* p : agent.encoder_params()) enc_after.push_back(p->value->data);

    bool buffer_same = before.size() == after.size();
    for (size_t i = 0; buffer_same && i < before.size(); ++i)
      buffer_same = before[i].obs == after[i].obs && before[i].next_obs == after[i].next_obs &&
                    before[i].n_step_reward == after[i].n_step_reward &&
                    before[i].discount_n == after[i].discount_n;
    const bool reset_ok = buffer_same && enc_before == enc_after && head->value->data != head_before;
    ok = ok && reset_ok;
    detail += std::string("reset ") + (reset_ok ? "ok" : "BROKEN");
  }

  {  // shrink-and-perturb with zeroed fresh draw is exact alpha scaling
    Rng init(11);
    Agent agent(tiny_agent_cfg(), init);
    auto* w = agent.find_param("critic.q2.fc1.weight");
    const auto before = w->value->data;
    Rng irng(12);
    shrink_and_perturb(agent, {"critic."}, 0.8, irng, /*zero_fresh=*/true);
    bool sp_ok = true;
    for (int64_t i = 0; i < w->value->numel(); ++i)
      sp_ok = sp_ok && w->value->data[i] == 0.8f * before[i];
    ok = ok && sp_ok;
    detail += std::string(", shrink@zero-fresh ") + (sp_ok ? "ok" : "BROKEN");
  }

  {  // l2-init closed form at coef 1e-2
    Parameter<double> p("w", Tensor<double>({1}, 1.0), 1e-4);
    p.value->data[0] = 3.0;  // theta - theta0 = 2
    const double pen = l2_init_penalty<double>({&p}, 0.01);
    Tape<double> tape;
    p.value->requires_grad = true;
    auto node = init_drift_penalty<double>(&tape, p.value, p.initial, 0.01);
    tape.backward(node);
    const bool l2_ok = std::fabs(pen - 0.04) < 1e-15 && std::fabs(p.value->grad[0] - 0.04) < 1e-15;
    ok = ok && l2_ok;
    detail += std::string(", l2-init ") + (l2_ok ? "ok" : "BROKEN");
  }

  report(8, "intervention safety", ok, detail);
}

// ---- criteria 9 and 10: desk-scale runs ------------------------------------
ExperimentConfig desk_config(const std::string& out) {
  ExperimentConfig cfg = build_config(RawConfig::from_text(""));  // library defaults
  cfg.output_dir = out;
  cfg.seeds = {0};
  return cfg;
}

void criterion_determinism_and_runtime(const std::string& out_root) {
  auto cfg = desk_config(out_root + "/det");
  const double cpu0 = cpu_seconds();
  auto r1 = run_single(cfg, "det_a", 0, out_root + "/det");
  const double cpu1 = cpu_seconds();
  auto r2 = run_single(cfg, "det_b", 0, out_root + "/det");

  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const bool identical = slurp(r1.csv_path) == slurp(r2.csv_path);
  const double run_cpu_min = (cpu1 - cpu0) / 60.0;
  std::ostringstream d;
  d << "CSV bytes " << (identical ? "identical" : "DIFFER") << ", one 50k run = " << run_cpu_min
    << " CPU-min";
  report(9, "determinism + runtime", identical && run_cpu_min < 25.0 && !r1.aborted, d.str());
}

struct SmokeJob {
  ExperimentConfig cfg;
  std::string arm;
  uint64_t seed;
  RunResult result;
};

void run_jobs(std::vector<SmokeJob>& jobs, const std::string& out_root, int workers) {
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      std::fprintf(stderr, "  [smoke] %s seed %llu...\n", jobs[i].arm.c_str(),
                   static_cast<unsigned long long>(jobs[i].seed));
      jobs[i].result = run_single(jobs[i].cfg, jobs[i].arm, jobs[i].seed, out_root);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

void criterion_smoke(const std::string& out_root) {
  const std::string smoke_root = out_root + "/smoke";
  std::vector<SmokeJob> jobs;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto on = desk_config(smoke_root);
    on.da.enabled = true;
    jobs.push_back({on, "da_on", seed, {}});
    auto off = desk_config(smoke_root);
    off.da.enabled = false;
    jobs.push_back({off, "da_off", seed, {}});
  }
  {
    // The plateau threshold is desk-scaled: a 10k-step checkpoint window on a
    // 50k-step run covers a far larger fraction of training than the same
    // window does of a multi-million-step run, so phi moves proportionally
    // more per window. 0.02 sits between the measured recovery-phase deltas
    // (~0.04) and post-recovery deltas (~0.017). The config default is 0.001.
    auto ad = desk_config(smoke_root);
    ad.rr_mode = "adaptive";
    ad.rr_epsilon = 0.02;
    jobs.push_back({ad, "adaptive", 0, {}});
    auto hi = desk_config(smoke_root);
    hi.rr_mode = "static";
    hi.rr_value = ad.rr_high;
    jobs.push_back({hi, "static_high", 0, {}});
  }
  run_jobs(jobs, smoke_root, 2);

  // (a) DA on vs off: final mean return exceeds by more than one pooled std
  std::vector<double> on_returns, off_returns;
  for (const auto& j : jobs) {
    if (j.arm == "da_on") on_returns.push_back(j.result.final_return_mean);
    if (j.arm == "da_off") off_returns.push_back(j.result.final_return_mean);
  }
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
  };
  auto var_of = [&](const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
  };
  const double mean_on = mean_of(on_returns), mean_off = mean_of(off_returns);
  const double pooled = std::sqrt((var_of(on_returns) + var_of(off_returns)) / 2.0);
  {
    std::ostringstream d;
    d << "DA-on " << mean_on << " vs DA-off " << mean_off << ", pooled std " << pooled;
    report(10, "smoke (a) DA ordering", mean_on - mean_off > pooled, d.str(), /*required=*/false);
  }

  // (b) adaptive phi at the switch checkpoint vs static rr=2 at the same step
  const SmokeJob* adaptive = nullptr;
  const SmokeJob* static_high = nullptr;
  for (const auto& j : jobs) {
    if (j.arm == "adaptive") adaptive = &j;
    if (j.arm == "static_high") static_high = &j;
  }
  auto csv_a = read_csv(adaptive->result.csv_path);
  auto csv_h = read_csv(static_high->result.csv_path);
  const int si_a = csv_a.column_index("step"), pi_a = csv_a.column_index("phi_critic");
  const int si_h = csv_h.column_index("step"), pi_h = csv_h.column_index("phi_critic");

  int switch_events = 0;
  std::optional<int64_t> switch_step = adaptive->result.rr_switch_step;
  for (size_t i = 0; i < csv_a.rows.size(); ++i)
    if (csv_a.events[i].find("rr_switch") != std::string::npos) switch_events += 1;

  std::optional<double> phi_adaptive, phi_static;
  if (switch_step) {
    for (size_t i = 0; i < csv_a.rows.size(); ++i)
      if (csv_a.rows[i][si_a] && static_cast<int64_t>(*csv_a.rows[i][si_a]) == *switch_step &&
          csv_a.rows[i][pi_a])
        phi_adaptive = *csv_a.rows[i][pi_a];
    for (size_t i = 0; i < csv_h.rows.size(); ++i)
      if (csv_h.rows[i][si_h] && static_cast<int64_t>(*csv_h.rows[i][si_h]) == *switch_step &&
          csv_h.rows[i][pi_h])
        phi_static = *csv_h.rows[i][pi_h];
  }
  {
    std::ostringstream d;
    if (switch_step && phi_adaptive && phi_static)
      d << "switch@" << *switch_step << ": adaptive phi " << *phi_adaptive << " vs static-2 phi "
        << *phi_static;
    else
      d << "no switch checkpoint to compare (switch "
        << (switch_step ? "found" : "never happened") << ")";
    report(10, "smoke (b) phi at switch", phi_adaptive && phi_static && *phi_adaptive > *phi_static,
           d.str(), /*required=*/false);
  }

  // (c) exactly one switch + update conservation across the two phases
  bool conservation = false;
  std::ostringstream dc;
  if (switch_step && switch_events == 1) {
    const auto& cfg = adaptive->cfg;
    const int64_t active_pre = *switch_step - cfg.seed_frames + 1;
    const int64_t active_post = cfg.total_steps - *switch_step;
    const double expected = cfg.rr_low * active_pre + cfg.rr_high * active_post;
    conservation = std::fabs(expected - static_cast<double>(adaptive->result.total_updates)) <= 1.0;
    dc << "switch@" << *switch_step << ", updates " << adaptive->result.total_updates
       << " vs expected " << expected << " +/-1";
  } else {
    dc << "rr_switch events = " << switch_events << " (need exactly 1)";
  }
  report(10, "smoke (c) single latched switch", switch_events == 1 && conservation, dc.str());
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  const std::string out_root = "acceptance_runs";
  fs::remove_all(out_root);
  fs::create_directories(out_root);

  criterion_gradients();
  criterion_injection_identity();
  criterion_crelu_pairing();
  criterion_fresh_fau();
  criterion_nstep_oracle();
  criterion_rr_conservation();
  criterion_controller_table();
  criterion_intervention_safety();
  criterion_determinism_and_runtime(out_root);
  criterion_smoke(out_root);

  std::printf("%s (%d required failure%s)\n", g_failures == 0 ? "ALL REQUIRED CRITERIA PASS" : "FAILURES",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
