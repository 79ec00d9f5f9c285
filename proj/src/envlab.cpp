#include "vrlab/envlab/env.hpp"

#include <algorithm>
#include <cmath>

#include "vrlab/errors.hpp"

namespace vrlab {

namespace {

constexpr float kBackground = 0.08f;

inline float quantize(float v) {
  v = std::clamp(v, 0.0f, 1.0f);
  return std::round(v * 255.0f) / 255.0f;
}

// World coords are [-1,1]^2 with y pointing up; pixel rows grow downward.
inline double world_to_px_x(double wx, int size) { return (wx + 1.0) * 0.5 * (size - 1); }
inline double world_to_px_y(double wy, int size) { return (1.0 - wy) * 0.5 * (size - 1); }

}  // namespace

void draw_disc(std::vector<float>& frame, int size, double wx, double wy, double radius_px,
               float level) {
  const double cx = world_to_px_x(wx, size);
  const double cy = world_to_px_y(wy, size);
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius_px - 1)));
  const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + radius_px + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius_px - 1)));
  const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + radius_px + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      const double cover = std::clamp(radius_px - d + 0.5, 0.0, 1.0);
      if (cover <= 0) continue;
      float& px = frame[static_cast<size_t>(y) * size + x];
      px = std::max(px, static_cast<float>(cover) * level);
    }
  }
}

Observation Env::reset(uint64_t seed) {
  Rng rng(mix64(seed));
  sample_state(rng);
  steps_ = 0;
  std::vector<float> frame(static_cast<size_t>(spec_.frame_size) * spec_.frame_size, kBackground);
  draw(frame);
  for (auto& v : frame) v = quantize(v);
  stack_.clear();
  for (int i = 0; i < spec_.frame_stack; ++i) stack_.push_back(frame);
  return stacked();
}

StepResult Env::step(const std::vector<double>& action) {
  if (static_cast<int>(action.size()) != spec_.action_dim)
    throw ConfigError("env step: expected " + std::to_string(spec_.action_dim) + " action dims");
  std::vector<double> a(action.size());
  for (size_t i = 0; i < action.size(); ++i) {
    if (!std::isfinite(action[i])) throw ContractViolation("env step: non-finite action");
    a[i] = std::clamp(action[i], -1.0, 1.0);
  }
  double reward = 0.0;
  for (int r = 0; r < spec_.action_repeat; ++r) reward += substep(a);
  reward /= spec_.action_repeat;

  std::vector<float> frame(static_cast<size_t>(spec_.frame_size) * spec_.frame_size, kBackground);
  draw(frame);
  for (auto& v : frame) v = quantize(v);
  stack_.pop_front();
  stack_.push_back(std::move(frame));

  steps_ += 1;
  StepResult out;
  out.obs = stacked();
  out.reward = reward;
  out.done = steps_ >= spec_.episode_len;
  out.physics_state = state_;
  return out;
}

Tensor<float> Env::render_frame() const {
  Tensor<float> t({1, spec_.frame_size, spec_.frame_size});
  std::fill(t.data.begin(), t.data.end(), kBackground);
  std::vector<float> frame(t.data.begin(), t.data.end());
  draw(frame);
  for (size_t i = 0; i < frame.size(); ++i) t.data[i] = quantize(frame[i]);
  return t;
}

Observation Env::stacked() const {
  const int hw = spec_.frame_size * spec_.frame_size;
  auto px = make_tensor<float>({spec_.frame_stack, spec_.frame_size, spec_.frame_size});
  for (int s = 0; s < spec_.frame_stack; ++s)
    std::copy(stack_[s].begin(), stack_[s].end(), px->data.begin() + static_cast<int64_t>(s) * hw);
  return Observation{px};
}

namespace {

// 2-d point mass pushed by force actions toward a fixed goal.
// Sub-step: v <- 0.95 v + dt a; p <- clip(p + dt v); reward exp(-4 d^2).
class PointMassEnv final : public Env {
 public:
  static constexpr double kGoalX = 0.55;
  static constexpr double kGoalY = 0.55;

  explicit PointMassEnv(EnvSpec spec) : Env(std::move(spec)) {}

 protected:
  void sample_state(Rng& rng) override {
    state_ = {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), 0.0, 0.0};
  }

  double substep(const std::vector<double>& a) override {
    constexpr double dt = 0.05;
    constexpr double damping = 0.95;
    state_[2] = damping * state_[2] + dt * a[0];
    state_[3] = damping * state_[3] + dt * a[1];
    state_[0] = std::clamp(state_[0] + dt * state_[2], -1.0, 1.0);
    state_[1] = std::clamp(state_[1] + dt * state_[3], -1.0, 1.0);
    const double dx = state_[0] - kGoalX;
    const double dy = state_[1] - kGoalY;
    return std::exp(-4.0 * (dx * dx + dy * dy));
  }

  void draw(std::vector<float>& frame) const override {
    const int s = spec().frame_size;
    draw_disc(frame, s, kGoalX, kGoalY, s * 0.06, 0.5f);
    draw_disc(frame, s, state_[0], state_[1], s * 0.08, 1.0f);
  }
};

// Torque-limited pendulum swing-up; theta = 0 is upright, the rewarded pose.
class PendulumEnv final : public Env {
 public:
  static constexpr double kRod = 0.75;

  explicit PendulumEnv(EnvSpec spec) : Env(std::move(spec)) {}

 protected:
  void sample_state(Rng& rng) override {
    double theta = M_PI + rng.uniform(-0.1, 0.1);
    if (theta > M_PI) theta -= 2.0 * M_PI;
    state_ = {theta, rng.uniform(-0.05, 0.05)};
  }

  double substep(const std::vector<double>& a) override {
    constexpr double dt = 0.05;
    constexpr double gravity = 6.0;    // pulls away from upright
    constexpr double torque = 3.0;     // below gravity: swing-up needs pumping
    state_[1] += dt * (gravity * std::sin(state_[0]) + torque * a[0]);
    state_[1] = std::clamp(state_[1] * 0.995, -8.0, 8.0);
    state_[0] += dt * state_[1];
    while (state_[0] > M_PI) state_[0] -= 2.0 * M_PI;
    while (state_[0] < -M_PI) state_[0] += 2.0 * M_PI;
    return (1.0 + std::cos(state_[0])) / 2.0;
  }

  void draw(std::vector<float>& frame) const override {
    const int s = spec().frame_size;
    draw_disc(frame, s, 0.0, kRod, s * 0.06, 0.5f);
    draw_disc(frame, s, kRod * std::sin(state_[0]), kRod * std::cos(state_[0]), s * 0.08, 1.0f);
  }
};

}  // namespace

std::unique_ptr<Env> make_env(const EnvSpec& spec) {
  EnvSpec s = spec;
  if (s.frame_size < 16) throw ConfigError("env: frame_size must be >= 16");
  if (s.frame_stack < 1 || s.action_repeat < 1 || s.episode_len < 1)
    throw ConfigError("env: bad spec");
  if (s.name == "pointmass") {
    s.action_dim = 2;
    return std::make_unique<PointMassEnv>(s);
  }
  if (s.name == "pendulum") {
    s.action_dim = 1;
    return std::make_unique<PendulumEnv>(s);
  }
  throw ConfigError("env: unknown environment '" + s.name + "'");
}

}  // namespace vrlab
