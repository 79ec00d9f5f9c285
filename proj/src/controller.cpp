#include "vrlab/adaptive_rr/controller.hpp"

#include <cmath>

#include "vrlab/errors.hpp"

namespace vrlab {

RRController RRController::fixed_rr(double rr) {
  if (rr <= 0) throw ConfigError("rr: ratio must be positive");
  RRController c;
  c.mode_ = RRMode::fixed;
  c.rr_current_ = c.rr_low_ = c.rr_high_ = rr;
  return c;
}

RRController RRController::adaptive(double low, double high, double epsilon,
                                    int64_t check_interval, int64_t min_steps_before_check,
                                    double phi_ema) {
  if (low <= 0 || high <= 0) throw ConfigError("rr: ratios must be positive");
  if (check_interval <= 0) throw ConfigError("rr: check interval must be positive");
  RRController c;
  c.mode_ = RRMode::adaptive;
  c.rr_low_ = low;
  c.rr_high_ = high;
  c.rr_current_ = low;
  c.epsilon_ = epsilon;
  c.check_interval_ = check_interval;
  c.min_steps_before_check_ = min_steps_before_check;
  c.phi_ema_ = phi_ema;
  return c;
}

int RRController::updates_due() {
  accumulator_ += rr_current_;
  const int k = static_cast<int>(std::floor(accumulator_));
  accumulator_ -= k;
  return k;
}

RRController::Decision RRController::observe_fau(int64_t step, double phi_critic) {
  if (!(phi_critic >= 0.0 && phi_critic <= 1.0))
    throw ContractViolation("rr: phi must lie in [0,1]");
  if (mode_ != RRMode::adaptive || switched_) return Decision::keep;

  double phi = phi_critic;
  if (phi_ema_ > 0.0) {
    ema_ = ema_ ? (1.0 - phi_ema_) * *ema_ + phi_ema_ * phi : phi;
    phi = *ema_;
  }

  if (last_phi_ && std::fabs(phi - *last_phi_) < epsilon_) {
    rr_current_ = rr_high_;
    switched_ = true;
    switch_step_ = step;
    return Decision::switch_to_high;
  }
  last_phi_ = phi;
  return Decision::keep;
}

RRController::Summary RRController::describe() const {
  return Summary{mode_, rr_current_, switched_, switch_step_};
}

}  // namespace vrlab
