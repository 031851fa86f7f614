#include "navsim/pid.hpp"

#include <algorithm>
#include <stdexcept>

namespace navsim {

double PidController::update(double target, double current, double dt) {
  if (dt <= 0.0) {
    throw std::invalid_argument("PidController::update requires dt > 0");
  }
  const double error = target - current;
  const double derivative = has_previous_ ? (error - previous_error_) / dt : 0.0;
  const double candidate_integral = integral_ + error * dt;
  const double raw =
      gains_.kp * error + gains_.ki * candidate_integral + gains_.kd * derivative;
  if (raw >= -1.0 && raw <= 1.0) {
    integral_ = candidate_integral;
  }
  previous_error_ = error;
  has_previous_ = true;
  return std::clamp(raw, -1.0, 1.0);
}

void PidController::reset() {
  integral_ = 0.0;
  previous_error_ = 0.0;
  has_previous_ = false;
}

PidGains speed_pid_gains() { return PidGains{0.35, 0.08, 0.0}; }

PidGains steering_pid_gains() { return PidGains{6.0, 0.5, 0.1}; }

}  // namespace navsim
