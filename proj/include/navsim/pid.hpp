#pragma once

namespace navsim {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

/// PID on error = target - current with output clamped to [-1, 1]. The
/// integral freezes while the output is saturated, so it cannot wind up
/// beyond what the clamp can deliver.
class PidController {
 public:
  PidController() = default;
  explicit PidController(PidGains gains) : gains_(gains) {}

  /// Advances the controller by dt and returns the clamped effort.
  double update(double target, double current, double dt);

  void reset();

  const PidGains& gains() const { return gains_; }
  double integral() const { return integral_; }

 private:
  PidGains gains_;
  double integral_ = 0.0;
  double previous_error_ = 0.0;
  bool has_previous_ = false;
};

/// Default speed-loop gains, tuned once against the shipped profiles.
PidGains speed_pid_gains();

/// Default steering-loop gains.
PidGains steering_pid_gains();

}  // namespace navsim
