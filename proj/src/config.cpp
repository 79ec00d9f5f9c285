#include "vrlab/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vrlab/errors.hpp"

namespace vrlab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

// Typed accessors that mark keys as consumed.
struct Reader {
  const std::map<std::string, std::string>& kv;
  std::set<std::string> used;

  bool has(const std::string& k) { return kv.count(k) > 0; }

  std::string str(const std::string& k, const std::string& dflt) {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    used.insert(k);
    return it->second;
  }
  int64_t i64(const std::string& k, int64_t dflt) {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    used.insert(k);
    try {
      size_t pos = 0;
      const int64_t v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("config: key '" + k + "' is not an integer: " + it->second);
    }
  }
  double f64(const std::string& k, double dflt) {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    used.insert(k);
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw ConfigError("config: key '" + k + "' is not a number: " + it->second);
    }
  }
  bool boolean(const std::string& k, bool dflt) {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    used.insert(k);
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("config: key '" + k + "' is not a boolean: " + v);
  }
};

std::vector<ShiftToggle> parse_schedule(const std::string& text) {
  std::vector<ShiftToggle> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2 || (parts[1] != "on" && parts[1] != "off"))
      throw ConfigError("config: da.schedule entries must look like '1000:off': " + item);
    ShiftToggle t;
    try {
      t.step = std::stoll(parts[0]);
    } catch (...) {
      throw ConfigError("config: bad step in da.schedule: " + item);
    }
    t.on = parts[1] == "on";
    out.push_back(t);
  }
  for (size_t i = 1; i < out.size(); ++i)
    if (out[i].step <= out[i - 1].step)
      throw ConfigError("config: da.schedule steps must be strictly increasing");
  return out;
}

}  // namespace

RawConfig RawConfig::from_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno += 1;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    raw.kv[key] = value;
  }
  return raw;
}

RawConfig RawConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

int ExperimentConfig::derived_pad() const {
  if (da.pad >= 0) return da.pad;
  return static_cast<int>(std::lround(env.frame_size * 4.0 / 84.0));
}

ExperimentConfig build_config(const RawConfig& raw) {
  Reader r{raw.kv, {}};
  ExperimentConfig c;

  c.env.name = r.str("env.name", c.env.name);
  c.env.frame_size = static_cast<int>(r.i64("env.frame_size", c.env.frame_size));
  c.env.frame_stack = static_cast<int>(r.i64("env.frame_stack", c.env.frame_stack));
  c.env.action_repeat = static_cast<int>(r.i64("env.action_repeat", c.env.action_repeat));
  c.env.episode_len = static_cast<int>(r.i64("env.episode_len", c.env.episode_len));

  c.total_steps = r.i64("run.total_steps", c.total_steps);
  if (r.has("run.seeds")) {
    c.seeds.clear();
    for (const auto& s : split(r.str("run.seeds", ""), ','))
      if (!s.empty()) c.seeds.push_back(static_cast<uint64_t>(std::stoull(s)));
  }
  c.protocol = r.str("run.protocol", c.protocol);
  c.output_dir = r.str("run.output_dir", c.output_dir);
  c.eval_enabled = r.boolean("run.eval_enabled", c.eval_enabled);
  c.eval_interval_episodes = static_cast<int>(r.i64("run.eval_interval_episodes", c.eval_interval_episodes));
  c.eval_episodes = static_cast<int>(r.i64("run.eval_episodes", c.eval_episodes));

  c.batch_size = static_cast<int>(r.i64("agent.batch_size", c.batch_size));
  c.lr = static_cast<float>(r.f64("agent.lr", c.lr));
  c.tau = static_cast<float>(r.f64("agent.tau", c.tau));
  c.gamma = static_cast<float>(r.f64("agent.gamma", c.gamma));
  c.nstep = static_cast<int>(r.i64("agent.nstep", c.nstep));
  c.features_dim = r.i64("agent.features_dim", c.features_dim);
  c.hidden_dim = r.i64("agent.hidden_dim", c.hidden_dim);
  c.stddev_start = static_cast<float>(r.f64("agent.stddev_start", c.stddev_start));
  c.stddev_end = static_cast<float>(r.f64("agent.stddev_end", c.stddev_end));
  c.stddev_horizon = r.i64("agent.stddev_horizon", c.stddev_horizon);
  c.noise_clip = static_cast<float>(r.f64("agent.noise_clip", c.noise_clip));
  const std::string scheme = r.str("agent.init_scheme", "orthogonal");
  if (scheme == "orthogonal") {
    c.init_scheme = InitScheme::orthogonal;
  } else if (scheme == "uniform_fanin") {
    c.init_scheme = InitScheme::uniform_fanin;
  } else {
    throw ConfigError("config: unknown agent.init_scheme: " + scheme);
  }

  c.replay_capacity = r.i64("replay.capacity", c.replay_capacity);
  c.seed_frames = r.i64("replay.seed_frames", c.seed_frames);
  c.exploration_steps = r.i64("replay.exploration_steps", c.exploration_steps);

  c.da.enabled = r.boolean("da.enabled", true);
  c.da.pad = static_cast<int>(r.i64("da.pad", -1));
  c.da.schedule = parse_schedule(r.str("da.schedule", ""));

  auto& iv = c.interventions;
  iv.reset.count = static_cast<int>(r.i64("reset.count", 0));
  iv.reset.interval = r.i64("reset.interval", 0);
  if (r.has("reset.targets")) iv.reset.targets = split(r.str("reset.targets", ""), ',');
  iv.injection.module = r.str("injection.module", "");
  iv.injection.step = r.i64("injection.step", -1);
  iv.shrink_perturb.interval = r.i64("shrink_perturb.interval", 0);
  iv.shrink_perturb.alpha = r.f64("shrink_perturb.alpha", 0.8);
  if (r.has("shrink_perturb.targets"))
    iv.shrink_perturb.targets = split(r.str("shrink_perturb.targets", ""), ',');
  iv.l2_init.coef = r.f64("l2_init.coef", 0.0);
  iv.l2_init.include_encoder = r.boolean("l2_init.include_encoder", false);
  iv.weight_decay = r.f64("weight_decay", 0.0);
  iv.layer_norm = r.boolean("layer_norm", false);
  iv.spectral_norm = r.boolean("spectral_norm", false);
  iv.crelu_critic = r.boolean("crelu_critic", false);

  c.rr_mode = r.str("rr.mode", c.rr_mode);
  c.rr_value = r.f64("rr.value", c.rr_value);
  c.rr_low = r.f64("rr.low", c.rr_low);
  c.rr_high = r.f64("rr.high", c.rr_high);
  c.rr_epsilon = r.f64("rr.epsilon", c.rr_epsilon);
  c.rr_check_interval_episodes = static_cast<int>(r.i64("rr.check_interval_episodes", c.rr_check_interval_episodes));
  c.rr_phi_ema = r.f64("rr.phi_ema", c.rr_phi_ema);

  c.fau_interval_episodes = static_cast<int>(r.i64("fau.interval_episodes", c.fau_interval_episodes));
  c.fau_batch_size = static_cast<int>(r.i64("fau.batch_size", c.fau_batch_size));
  c.fau_eval = r.str("fau.eval", c.fau_eval);
  if (c.fau_eval != "anchor" && c.fau_eval != "fresh")
    throw ConfigError("config: fau.eval must be anchor or fresh");

  c.da_toggle_step = r.i64("protocol.da_toggle_step", -1);
  if (r.has("protocol.rr_sweep")) {
    c.rr_sweep.clear();
    for (const auto& s : split(r.str("protocol.rr_sweep", ""), ','))
      if (!s.empty()) c.rr_sweep.push_back(std::stod(s));
  }
  c.priming_transitions = r.i64("protocol.priming_transitions", c.priming_transitions);
  c.priming_updates = r.i64("protocol.priming_updates", c.priming_updates);

  for (const auto& [k, v] : raw.kv)
    if (!r.used.count(k)) throw ConfigError("config: unknown key '" + k + "'");

  // invariants
  if (c.seeds.empty()) throw ConfigError("config: run.seeds must be non-empty");
  if (c.env.episode_len <= 0 || c.total_steps % c.env.episode_len != 0)
    throw ConfigError("config: run.total_steps must be a multiple of env.episode_len");
  static const std::set<std::string> protocols = {"standard", "factorial_da_reset", "da_toggle",
                                                  "rr_sweep", "adaptive_rr", "heavy_priming"};
  if (!protocols.count(c.protocol)) throw ConfigError("config: unknown protocol " + c.protocol);
  if (c.rr_mode != "static" && c.rr_mode != "adaptive")
    throw ConfigError("config: rr.mode must be static or adaptive");
  if (c.rr_value <= 0 || c.rr_low <= 0 || c.rr_high <= 0)
    throw ConfigError("config: replay ratios must be positive");
  if (c.batch_size < 1) throw ConfigError("config: agent.batch_size must be positive");
  if (c.interventions.reset.count < 0 || c.interventions.reset.interval < 0)
    throw ConfigError("config: reset settings must be non-negative");
  if (!c.interventions.injection.module.empty() && c.interventions.injection.module != "actor" &&
      c.interventions.injection.module != "critic")
    throw ConfigError("config: injection.module must be actor or critic");
  if (c.interventions.l2_init.coef < 0 || c.interventions.weight_decay < 0)
    throw ConfigError("config: regularizer coefficients must be non-negative");
  if (c.interventions.shrink_perturb.alpha <= 0 || c.interventions.shrink_perturb.alpha > 1)
    throw ConfigError("config: shrink_perturb.alpha must lie in (0,1]");

  return c;
}

ExperimentConfig load_config(const std::string& path) { return build_config(RawConfig::from_file(path)); }

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  o << "env.name = " << c.env.name << "\n";
  o << "env.frame_size = " << c.env.frame_size << "\n";
  o << "env.frame_stack = " << c.env.frame_stack << "\n";
  o << "env.action_repeat = " << c.env.action_repeat << "\n";
  o << "env.episode_len = " << c.env.episode_len << "\n";
  o << "run.total_steps = " << c.total_steps << "\n";
  o << "run.seeds = ";
  for (size_t i = 0; i < c.seeds.size(); ++i) o << (i ? "," : "") << c.seeds[i];
  o << "\n";
  o << "run.protocol = " << c.protocol << "\n";
  o << "run.output_dir = " << c.output_dir << "\n";
  o << "run.eval_enabled = " << (c.eval_enabled ? "true" : "false") << "\n";
  o << "run.eval_interval_episodes = " << c.eval_interval_episodes << "\n";
  o << "run.eval_episodes = " << c.eval_episodes << "\n";
  o << "agent.batch_size = " << c.batch_size << "\n";
  o << "agent.lr = " << num(c.lr) << "\n";
  o << "agent.tau = " << num(c.tau) << "\n";
  o << "agent.gamma = " << num(c.gamma) << "\n";
  o << "agent.nstep = " << c.nstep << "\n";
  o << "agent.features_dim = " << c.features_dim << "\n";
  o << "agent.hidden_dim = " << c.hidden_dim << "\n";
  o << "agent.stddev_start = " << num(c.stddev_start) << "\n";
  o << "agent.stddev_end = " << num(c.stddev_end) << "\n";
  o << "agent.stddev_horizon = " << c.stddev_horizon << "\n";
  o << "agent.noise_clip = " << num(c.noise_clip) << "\n";
  o << "agent.init_scheme = "
    << (c.init_scheme == InitScheme::orthogonal ? "orthogonal" : "uniform_fanin") << "\n";
  o << "replay.capacity = " << c.replay_capacity << "\n";
  o << "replay.seed_frames = " << c.seed_frames << "\n";
  o << "replay.exploration_steps = " << c.exploration_steps << "\n";
  o << "da.enabled = " << (c.da.enabled ? "true" : "false") << "\n";
  o << "da.pad = " << c.da.pad << "\n";
  o << "da.schedule = ";
  for (size_t i = 0; i < c.da.schedule.size(); ++i)
    o << (i ? "," : "") << c.da.schedule[i].step << ":" << (c.da.schedule[i].on ? "on" : "off");
  o << "\n";
  o << "reset.count = " << c.interventions.reset.count << "\n";
  o << "reset.interval = " << c.interventions.reset.interval << "\n";
  o << "reset.targets = ";
  for (size_t i = 0; i < c.interventions.reset.targets.size(); ++i)
    o << (i ? "," : "") << c.interventions.reset.targets[i];
  o << "\n";
  o << "injection.module = " << c.interventions.injection.module << "\n";
  o << "injection.step = " << c.interventions.injection.step << "\n";
  o << "shrink_perturb.interval = " << c.interventions.shrink_perturb.interval << "\n";
  o << "shrink_perturb.alpha = " << num(c.interventions.shrink_perturb.alpha) << "\n";
  o << "l2_init.coef = " << num(c.interventions.l2_init.coef) << "\n";
  o << "l2_init.include_encoder = " << (c.interventions.l2_init.include_encoder ? "true" : "false")
    << "\n";
  o << "weight_decay = " << num(c.interventions.weight_decay) << "\n";
  o << "layer_norm = " << (c.interventions.layer_norm ? "true" : "false") << "\n";
  o << "spectral_norm = " << (c.interventions.spectral_norm ? "true" : "false") << "\n";
  o << "crelu_critic = " << (c.interventions.crelu_critic ? "true" : "false") << "\n";
  o << "rr.mode = " << c.rr_mode << "\n";
  o << "rr.value = " << num(c.rr_value) << "\n";
  o << "rr.low = " << num(c.rr_low) << "\n";
  o << "rr.high = " << num(c.rr_high) << "\n";
  o << "rr.epsilon = " << num(c.rr_epsilon) << "\n";
  o << "rr.check_interval_episodes = " << c.rr_check_interval_episodes << "\n";
  o << "rr.phi_ema = " << num(c.rr_phi_ema) << "\n";
  o << "fau.interval_episodes = " << c.fau_interval_episodes << "\n";
  o << "fau.batch_size = " << c.fau_batch_size << "\n";
  o << "fau.eval = " << c.fau_eval << "\n";
  return o.str();
}

}  // namespace vrlab
