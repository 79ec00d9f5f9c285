#include "vrlab/harness/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "vrlab/agent/agent.hpp"
#include "vrlab/agent/checkpoint.hpp"
#include "vrlab/harness/metrics.hpp"
#include "vrlab/harness/streams.hpp"
#include "vrlab/plasticity/plasticity.hpp"

namespace vrlab {

namespace {

std::string rr_label(double v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

}  // namespace

std::vector<ArmSpec> expand_protocol(const ExperimentConfig& base) {
  std::vector<ArmSpec> arms;
  if (base.protocol == "standard") {
    arms.push_back({"default", base});
  } else if (base.protocol == "factorial_da_reset") {
    const int reset_count = base.interventions.reset.count > 0 ? base.interventions.reset.count : 10;
    for (bool da : {true, false}) {
      for (bool reset : {true, false}) {
        ExperimentConfig c = base;
        c.da.enabled = da;
        c.da.schedule.clear();
        c.interventions.reset.count = reset ? reset_count : 0;
        c.interventions.reset.interval = 0;
        std::string name = std::string("da_") + (da ? "on" : "off") + "_reset_" + (reset ? "on" : "off");
        arms.push_back({name, c});
      }
    }
  } else if (base.protocol == "da_toggle") {
    const int64_t t = base.da_toggle_step >= 0 ? base.da_toggle_step : base.total_steps / 2;
    auto make = [&](bool start_on, std::optional<ShiftToggle> toggle, const std::string& name) {
      ExperimentConfig c = base;
      c.da.enabled = start_on;
      c.da.schedule.clear();
      if (toggle) c.da.schedule.push_back(*toggle);
      arms.push_back({name, c});
    };
    make(true, std::nullopt, "da_always_on");
    make(false, std::nullopt, "da_always_off");
    make(true, ShiftToggle{t, false}, "da_on_to_off");
    make(false, ShiftToggle{t, true}, "da_off_to_on");
  } else if (base.protocol == "rr_sweep") {
    for (double v : base.rr_sweep) {
      ExperimentConfig c = base;
      c.rr_mode = "static";
      c.rr_value = v;
      arms.push_back({"rr_" + rr_label(v), c});
    }
  } else if (base.protocol == "adaptive_rr") {
    ExperimentConfig a = base;
    a.rr_mode = "adaptive";
    arms.push_back({"adaptive", a});
    ExperimentConfig lo = base;
    lo.rr_mode = "static";
    lo.rr_value = base.rr_low;
    arms.push_back({"static_low", lo});
    ExperimentConfig hi = base;
    hi.rr_mode = "static";
    hi.rr_value = base.rr_high;
    arms.push_back({"static_high", hi});
  } else if (base.protocol == "heavy_priming") {
    ExperimentConfig c = base;
    c.priming_enabled = true;
    arms.push_back({"primed", c});
  } else {
    throw ConfigError("protocol: unknown protocol " + base.protocol);
  }
  return arms;
}

std::string resolve_output_root(const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::path p(output_dir);
  if (p.is_absolute()) return p.string();
  const char* root = std::getenv("VRLAB_OUTPUT_ROOT");
  if (root && *root) return (fs::path(root) / p).string();
  return p.string();
}

namespace {

struct LossAccum {
  double critic = 0.0, actor = 0.0;
  int64_t n = 0;
  void add(float c, float a, int k) {
    critic += static_cast<double>(c) * k;
    actor += static_cast<double>(a) * k;
    n += k;
  }
  std::optional<double> mean_critic() const {
    return n ? std::optional<double>(critic / n) : std::nullopt;
  }
  std::optional<double> mean_actor() const {
    return n ? std::optional<double>(actor / n) : std::nullopt;
  }
  void reset() { *this = LossAccum{}; }
};

double run_eval_episodes(Agent& agent, Env& eval_env, Rng& env_rng, int episodes) {
  double total = 0.0;
  Rng dummy(0);  // eval actions are noiseless; no draws happen
  for (int e = 0; e < episodes; ++e) {
    Observation obs = eval_env.reset(env_rng.next_u64());
    double ep = 0.0;
    while (true) {
      const auto action = agent.act(obs, ActMode::eval, dummy);
      StepResult sr = eval_env.step(action);
      ep += sr.reward;
      obs = sr.obs;
      if (sr.done) break;
    }
    total += ep;
  }
  return total / episodes;
}

}  // namespace

RunResult run_single(const ExperimentConfig& cfg, const std::string& arm_name, uint64_t seed,
                     const std::string& out_root) {
  namespace fs = std::filesystem;
  RunResult result;
  result.arm = arm_name;
  result.seed = seed;

  const fs::path dir = fs::path(out_root) / arm_name / ("seed" + std::to_string(seed));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RunAborted("run: cannot create output dir " + dir.string());

  {
    std::ofstream rc(dir / "resolved.cfg");
    if (!rc) throw RunAborted("run: output dir not writable: " + dir.string());
    rc << "# arm = " << arm_name << "\n# seed = " << seed << "\n" << dump_config(cfg);
  }

  result.csv_path = (dir / "metrics.csv").string();
  result.ckpt_path = (dir / "final.ckpt").string();
  MetricsWriter metrics(result.csv_path);

  // independent named streams per run
  Rng env_rng = rng_stream(seed, "env");
  Rng init_rng = rng_stream(seed, "init");
  Rng noise_rng = rng_stream(seed, "action_noise");
  Rng augment_rng = rng_stream(seed, "augment");
  Rng sample_rng = rng_stream(seed, "sample");
  Rng intervention_rng = rng_stream(seed, "intervention");

  auto env = make_env(cfg.env);
  std::unique_ptr<Env> eval_env;
  if (cfg.eval_enabled) eval_env = make_env(cfg.env);

  AgentConfig ac;
  ac.frame_stack = cfg.env.frame_stack;
  ac.frame_size = cfg.env.frame_size;
  ac.action_dim = env->spec().action_dim;
  ac.features_dim = cfg.features_dim;
  ac.hidden_dim = cfg.hidden_dim;
  ac.lr = cfg.lr;
  ac.tau = cfg.tau;
  ac.stddev_start = cfg.stddev_start;
  ac.stddev_end = cfg.stddev_end;
  ac.stddev_horizon = cfg.stddev_horizon;
  ac.noise_clip = cfg.noise_clip;
  ac.init_scheme = cfg.init_scheme;
  ac.layer_norm = cfg.interventions.layer_norm;
  ac.spectral_norm = cfg.interventions.spectral_norm;
  ac.crelu_critic = cfg.interventions.crelu_critic;
  ac.weight_decay = static_cast<float>(cfg.interventions.weight_decay);
  ac.l2_init_coef = static_cast<float>(cfg.interventions.l2_init.coef);
  ac.l2_init_encoder = cfg.interventions.l2_init.include_encoder;
  Agent agent(ac, init_rng);

  ReplayBuffer buffer(cfg.replay_capacity, cfg.env.frame_size, cfg.env.frame_stack,
                      env->spec().action_dim);

  RRController rr =
      cfg.rr_mode == "adaptive"
          ? RRController::adaptive(cfg.rr_low, cfg.rr_high, cfg.rr_epsilon,
                                   cfg.rr_check_interval_steps(),
                                   cfg.seed_frames + cfg.rr_check_interval_steps(), cfg.rr_phi_ema)
          : RRController::fixed_rr(cfg.rr_value);

  ShiftAugmentConfig da = cfg.da;
  da.pad = cfg.derived_pad();

  TrainStepCtx ctx;
  ctx.buffer = &buffer;
  ctx.env = env.get();
  ctx.rr = &rr;
  ctx.da = &da;
  ctx.noise_rng = &noise_rng;
  ctx.augment_rng = &augment_rng;
  ctx.sample_rng = &sample_rng;
  ctx.batch_size = cfg.batch_size;
  ctx.nstep = cfg.nstep;
  ctx.gamma = cfg.gamma;
  ctx.seed_frames = cfg.seed_frames;
  ctx.exploration_steps = cfg.exploration_steps;

  const int64_t fau_every = static_cast<int64_t>(cfg.fau_interval_episodes) * cfg.env.episode_len;
  const int64_t reset_interval =
      cfg.interventions.reset.interval > 0
          ? cfg.interventions.reset.interval
          : (cfg.interventions.reset.count > 0 ? cfg.total_steps / cfg.interventions.reset.count : 0);
  const int64_t sp_interval = cfg.interventions.shrink_perturb.interval;

  Observation obs = env->reset(env_rng.next_u64());
  int64_t episode = 0;
  double ep_return = 0.0;
  LossAccum losses;
  int64_t total_updates = 0;
  bool prev_da = da_active(da, 0);
  bool primed = false;
  std::deque<double> last_returns;
  std::optional<EvalBatch> fau_anchor;

  auto run_updates = [&](int64_t count, int64_t min_transitions, int64_t step) {
    const bool augment_now = da_active(da, step) && da.pad > 0;
    for (int64_t u = 0; u < count; ++u) {
      auto maybe = buffer.sample_nstep(cfg.batch_size, cfg.nstep, cfg.gamma, sample_rng,
                                       min_transitions);
      if (!maybe) break;
      Batch batch = *maybe;
      if (augment_now) {
        batch.obs = random_shift(batch.obs, da.pad, augment_rng);
        batch.next_obs_n = random_shift(batch.next_obs_n, da.pad, augment_rng);
      }
      const float cl = agent.update_critic(batch, noise_rng);
      const float al = agent.update_actor(batch, agent.cached_features());
      losses.add(cl, al, 1);
      total_updates += 1;
    }
  };

  try {
    for (int64_t step = 1; step <= cfg.total_steps; ++step) {
      StepOutcome so = train_step(agent, obs, ctx);
      ep_return += so.reward;
      if (so.updates > 0) losses.add(so.critic_loss, so.actor_loss, so.updates);
      total_updates += so.updates;

      const bool now_da = da_active(da, step);
      if (now_da != prev_da) {
        MetricsWriter::Row row;
        row.step = step;
        row.event = now_da ? "da_on" : "da_off";
        metrics.write(row);
        prev_da = now_da;
      }

      if (cfg.priming_enabled && !primed && buffer.size() >= cfg.priming_transitions) {
        primed = true;
        run_updates(cfg.priming_updates, cfg.priming_transitions, step);
      }

      const bool rr_checkpoint = rr.mode() == RRMode::adaptive &&
                                 step % rr.check_interval() == 0 &&
                                 step >= rr.min_steps_before_check();
      const bool fau_step = (fau_every > 0 && step % fau_every == 0) || rr_checkpoint;
      if (fau_step && buffer.size() >= cfg.fau_batch_size) {
        std::optional<EvalBatch> probe;
        if (cfg.fau_eval == "anchor" && fau_anchor) {
          probe = fau_anchor;
        } else {
          Rng fau_rng(mix64(seed ^ fnv1a64("fau_eval") ^ static_cast<uint64_t>(step)));
          auto eb =
              buffer.sample_nstep(cfg.fau_batch_size, 1, cfg.gamma, fau_rng, cfg.fau_batch_size);
          if (eb) {
            probe = EvalBatch{eb->obs, eb->action};
            if (cfg.fau_eval == "anchor") fau_anchor = probe;
          }
        }
        if (probe) {
          const EvalBatch& evb = *probe;
          FAUReport rep = measure_fau_report(agent, evb, step);
          MetricsWriter::Row row;
          row.step = step;
          row.phi_encoder = rep.phi_encoder;
          row.phi_actor = rep.phi_actor;
          row.phi_critic = rep.phi_critic;
          row.wn_encoder = rep.weight_norms.at("encoder");
          row.wn_actor = rep.weight_norms.at("actor");
          row.wn_critic = rep.weight_norms.at("critic");
          row.rr_current = rr.rr_current();
          row.total_updates = total_updates;
          metrics.write(row);
          if (rr_checkpoint) {
            const auto decision = rr.observe_fau(step, rep.phi_critic);
            if (decision == RRController::Decision::switch_to_high) {
              MetricsWriter::Row ev;
              ev.step = step;
              ev.event = "rr_switch";
              ev.rr_current = rr.rr_current();
              metrics.write(ev);
            }
          }
        }
      }

      if (reset_interval > 0 && step >= reset_interval && step % reset_interval == 0) {
        reset_heads(agent, cfg.interventions.reset.targets, intervention_rng);
        MetricsWriter::Row ev;
        ev.step = step;
        ev.event = "reset";
        metrics.write(ev);
      }
      if (!cfg.interventions.injection.module.empty() && step == cfg.interventions.injection.step) {
        inject_plasticity(agent, cfg.interventions.injection.module, intervention_rng);
        MetricsWriter::Row ev;
        ev.step = step;
        ev.event = "injection";
        metrics.write(ev);
      }
      if (sp_interval > 0 && step >= sp_interval && step % sp_interval == 0) {
        shrink_and_perturb(agent, cfg.interventions.shrink_perturb.targets,
                           cfg.interventions.shrink_perturb.alpha, intervention_rng);
        MetricsWriter::Row ev;
        ev.step = step;
        ev.event = "shrink_perturb";
        metrics.write(ev);
      }

      if (so.done) {
        episode += 1;
        MetricsWriter::Row row;
        row.step = step;
        row.episode = episode;
        row.episode_return = ep_return;
        row.critic_loss = losses.mean_critic();
        row.actor_loss = losses.mean_actor();
        row.rr_current = rr.rr_current();
        row.total_updates = total_updates;
        metrics.write(row);
        last_returns.push_back(ep_return);
        if (last_returns.size() > 10) last_returns.pop_front();
        ep_return = 0.0;
        losses.reset();

        if (cfg.eval_enabled && episode % cfg.eval_interval_episodes == 0) {
          const double ev = run_eval_episodes(agent, *eval_env, env_rng, cfg.eval_episodes);
          MetricsWriter::Row er;
          er.step = step;
          er.eval_return = ev;
          metrics.write(er);
        }

        if (step < cfg.total_steps) obs = env->reset(env_rng.next_u64());
        metrics.flush();
      }
    }
    save_checkpoint(agent, result.ckpt_path);
  } catch (const RunAborted& e) {
    MetricsWriter::Row row;
    row.step = agent.env_step + 1;  // past any logged step
    row.event = std::string("aborted:") + e.what();
    metrics.write(row);
    metrics.flush();
    result.aborted = true;
  }

  metrics.flush();
  result.total_updates = total_updates;
  result.rr_switch_step = rr.switch_step();
  if (!last_returns.empty()) {
    double s = 0.0;
    for (double v : last_returns) s += v;
    result.final_return_mean = s / last_returns.size();
  }
  return result;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, int workers) {
  const auto arms = expand_protocol(cfg);
  const std::string out_root = resolve_output_root(cfg.output_dir);

  struct Job {
    const ArmSpec* arm;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& arm : arms)
    for (uint64_t seed : cfg.seeds) jobs.push_back({&arm, seed});

  std::vector<RunResult> results(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex io_mutex;

  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& j = jobs[i];
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        std::fprintf(stderr, "[run] arm=%s seed=%llu start\n", j.arm->name.c_str(),
                     static_cast<unsigned long long>(j.seed));
      }
      results[i] = run_single(j.arm->cfg, j.arm->name, j.seed, out_root);
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        std::fprintf(stderr, "[run] arm=%s seed=%llu done (updates=%lld%s)\n", j.arm->name.c_str(),
                     static_cast<unsigned long long>(j.seed),
                     static_cast<long long>(results[i].total_updates),
                     results[i].aborted ? ", aborted" : "");
      }
    }
  };

  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < n; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return results;
}

}  // namespace vrlab
