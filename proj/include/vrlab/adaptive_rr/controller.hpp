#pragma once

#include <cstdint>
#include <optional>

namespace vrlab {

enum class RRMode { fixed, adaptive };

// Replay-ratio state machine. In adaptive mode it starts at rr_low and, once
// the critic FAU difference between consecutive checkpoints falls below
// epsilon, latches rr_high for the rest of the run. A fractional accumulator
// turns the (possibly non-integer) ratio into per-step update counts without
// drift: over any horizon the emitted updates track sum(rr) within one.
class RRController {
 public:
  static RRController fixed_rr(double rr);
  static RRController adaptive(double low, double high, double epsilon, int64_t check_interval,
                               int64_t min_steps_before_check, double phi_ema = 0.0);

  // Call once per environment step while training is active; returns how many
  // gradient updates to run now.
  int updates_due();

  enum class Decision { keep, switch_to_high };

  // Feed the critic FAU measured at a checkpoint step. Only the critic's
  // value may drive the switch; encoder/actor FAU never reach this point.
  Decision observe_fau(int64_t step, double phi_critic);

  struct Summary {
    RRMode mode = RRMode::fixed;
    double rr_current = 0.0;
    bool switched = false;
    std::optional<int64_t> switch_step;
  };
  Summary describe() const;

  RRMode mode() const { return mode_; }
  double rr_current() const { return rr_current_; }
  double rr_low() const { return rr_low_; }
  double rr_high() const { return rr_high_; }
  double epsilon() const { return epsilon_; }
  double accumulator() const { return accumulator_; }
  bool switched() const { return switched_; }
  std::optional<int64_t> switch_step() const { return switch_step_; }
  int64_t check_interval() const { return check_interval_; }
  int64_t min_steps_before_check() const { return min_steps_before_check_; }
  std::optional<double> last_phi() const { return last_phi_; }

 private:
  RRMode mode_ = RRMode::fixed;
  double rr_low_ = 0.5;
  double rr_high_ = 2.0;
  double rr_current_ = 0.5;
  double accumulator_ = 0.0;
  int64_t check_interval_ = 10000;
  double epsilon_ = 0.001;
  std::optional<double> last_phi_;
  bool switched_ = false;
  std::optional<int64_t> switch_step_;
  int64_t min_steps_before_check_ = 0;
  double phi_ema_ = 0.0;  // 0 = use raw checkpoint values
  std::optional<double> ema_;
};

}  // namespace vrlab
