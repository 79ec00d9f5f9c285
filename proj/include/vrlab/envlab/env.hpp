#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "vrlab/numerics/tensor.hpp"
#include "vrlab/rng.hpp"

namespace vrlab {

struct EnvSpec {
  std::string name = "pointmass";
  int frame_size = 48;
  int frame_stack = 3;
  int action_dim = 2;
  int action_repeat = 2;
  int episode_len = 200;  // agent steps per episode
  bool grayscale = true;
};

// Stacked grayscale frames, [frame_stack, H, W], values on the 1/255 grid.
struct Observation {
  TensorPtr<float> pixels;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  std::vector<double> physics_state;  // test oracle only; never fed to the agent
};

// Fixed-horizon pixel-rendered continuous-control task. Dynamics advance in
// action_repeat sub-steps per agent step; the reward is the sub-step mean.
class Env {
 public:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  Observation reset(uint64_t seed);
  StepResult step(const std::vector<double>& action);

  // Renders the current physics state into a single [1,H,W] frame.
  Tensor<float> render_frame() const;

  const std::vector<double>& physics_state() const { return state_; }
  // test API: place the dynamics in a known state; the frame stack is untouched
  void set_physics_state(std::vector<double> s) { state_ = std::move(s); }
  int steps_taken() const { return steps_; }

 protected:
  virtual void sample_state(Rng& rng) = 0;
  virtual double substep(const std::vector<double>& action) = 0;
  virtual void draw(std::vector<float>& frame) const = 0;

  std::vector<double> state_;

 private:
  Observation stacked() const;

  EnvSpec spec_;
  std::deque<std::vector<float>> stack_;
  int steps_ = 0;
};

std::unique_ptr<Env> make_env(const EnvSpec& spec);

// Render helper shared by the tasks: antialiased disc, max-composited.
void draw_disc(std::vector<float>& frame, int size, double wx, double wy, double radius_px,
               float level);

}  // namespace vrlab
