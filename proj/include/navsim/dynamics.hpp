#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "navsim/vehicle.hpp"

namespace navsim {

inline constexpr double kGravity = 9.81;  // m/s^2

/// Reference longitudinal/steering plant used to collect profiling trials.
/// Stands in for the physics simulator the profiles are normally measured
/// against; all behavior is closed-form and deterministic.
struct PlantModel {
  /// Engine drive force in N versus speed, linearly interpolated between
  /// knots, clamped at the ends.
  std::vector<Eigen::Vector2d> engine_curve;  // (speed m/s, force N), ascending speed
  double brake_force_max = 0.0;               // N
  double drag_coeff = 0.0;                    // kg/m, force = drag_coeff * v^2
  double rolling_resistance = 0.0;            // N
  double mu = 0.0;                            // tire-road friction coefficient
  double mass = 0.0;                          // kg
  double steer_rate_base = 0.0;               // rad/s at u_s = 1, wheel centered
  double steer_rate_sat = 0.0;                // fractional slowdown toward lock, in [0, 1)
  double steer_rate_speed_coeff = 0.0;        // rate scaled by 1/(1 + c * v)

  void validate() const;

  double engine_force(double v) const;

  /// Traction budget in N.
  double traction_limit() const { return mu * mass * kGravity; }

  /// Net longitudinal acceleration under full or partial effort u in [-1, 1],
  /// with drive and brake forces capped at the traction budget.
  double longitudinal_accel(double v, double u) const;

  /// Steering actuator rate for effort u_s at wheel angle phi and speed v.
  double steer_rate_limit(double phi, double u_s, double v, double max_steering) const;
};

/// One profiling sample, recorded at the trial rate.
struct TrialSample {
  double t = 0.0;          // s
  double speed = 0.0;      // m/s
  double accel = 0.0;      // m/s^2
  double control = 0.0;    // u_t or u_s
  double steering = 0.0;   // rad
  double steer_rate = 0.0; // rad/s
};

struct TrialLog {
  std::vector<TrialSample> samples;
  double rate_hz = 60.0;
  double achieved_max_speed = 0.0;
  bool reached_target = true;
};

enum class TrialField { time, speed, accel, control, steering, steer_rate };

struct ProfilingTrials {
  TrialLog acceleration;
  TrialLog braking;
  TrialLog steering;  // concatenated sweeps over the u_s grid at fixed speeds
};

struct ProfileOptions {
  int envelope_segments = 4;
  std::vector<double> steer_effort_grid = {0.25, 0.5, 0.75, 1.0};
  std::vector<double> steer_trial_speeds = {5.0, 15.0, 30.0};
};

/// Drives the plant through full-throttle, full-brake, and steering-sweep
/// trials at 60 Hz. Samples whose commanded force exceeds the traction
/// budget are excluded.
ProfilingTrials collect_trials(const PlantModel& plant, const VehicleParams& params,
                               const ProfileOptions& options = {});

/// Quadratic spline with independent per-segment least-squares coefficients
/// over equal-width knot spans.
class PiecewiseQuadratic {
 public:
  PiecewiseQuadratic() = default;
  PiecewiseQuadratic(std::vector<double> knots, std::vector<Eigen::Vector3d> coeffs);

  /// Evaluate at x, clamped into the fitted domain.
  double operator()(double x) const;

  double domain_min() const { return knots_.front(); }
  double domain_max() const { return knots_.back(); }
  int segment_count() const { return static_cast<int>(coeffs_.size()); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Eigen::Vector3d>& coefficients() const { return coeffs_; }

 private:
  std::vector<double> knots_;                // ascending, size = segments + 1
  std::vector<Eigen::Vector3d> coeffs_;      // (a, b, c): a x^2 + b x + c
};

struct FitResult {
  PiecewiseQuadratic fn;
  double rms_residual = 0.0;
};

/// Least-squares piecewise-quadratic fit with equal-width segments.
/// Requires at least 3 * segment_count samples and a nondegenerate x range.
FitResult fit_piecewise_quadratic(std::span<const double> x, std::span<const double> y,
                                  int segment_count);
FitResult fit_piecewise_quadratic(const TrialLog& log, TrialField x_field, TrialField y_field,
                                  int segment_count);

/// Steering-rate envelope at one grid effort value.
struct SteerRateCurve {
  double effort = 0.0;  // u_s grid point, positive
  PiecewiseQuadratic rate_vs_steering;
};

/// Fitted data-driven dynamics envelopes and slip limits for one
/// (vehicle, mu) pair.
struct DynamicsProfile {
  std::string vehicle;
  double mu = 0.0;
  double v_max = 0.0;  // top speed actually achieved during profiling
  PiecewiseQuadratic accel_envelope;   // m/s^2 vs v, full throttle, >= 0
  PiecewiseQuadratic decel_envelope;   // m/s^2 vs v, full braking, <= 0
  std::vector<SteerRateCurve> steer_family;  // ascending effort
  double accel_fit_rms = 0.0;
  double decel_fit_rms = 0.0;
  double steer_fit_rms = 0.0;
};

/// A(v, u_t): drive for u_t >= 0, braking for u_t < 0. Sub-maximal effort
/// interpolates linearly between zero and the fitted envelope.
double accel(const DynamicsProfile& profile, double v, double u_t);

/// Phi(phi, u_s): steering rate, antisymmetric in (phi, u_s), linear between
/// the fitted effort-grid curves.
double steer_rate(const DynamicsProfile& profile, double phi, double u_s);

/// Top speed that holds traction on a circle of the given radius, capped at
/// the profiled top speed.
double max_safe_speed(const DynamicsProfile& profile, double radius);

/// Largest steering angle that holds traction at speed v, capped at the
/// vehicle's steering range. Unbounded by slip at rest.
double max_safe_steering(const DynamicsProfile& profile, const VehicleParams& params, double v);

/// S(u, X): whether the control pair is within the dynamic envelopes and the
/// implied curvature holds traction at the current speed.
bool is_feasible(const DynamicsProfile& profile, const VehicleParams& params,
                 const VehicleState& state, ControlInput u);

struct ProfiledDynamics {
  DynamicsProfile profile;
  ProfilingTrials trials;
};

/// Full profiling pipeline: trials plus envelope fitting.
ProfiledDynamics profile_vehicle(const PlantModel& plant, const VehicleParams& params,
                                 const ProfileOptions& options = {});

/// Built-in reference plants matching the vehicle presets.
PlantModel default_plant(const std::string& vehicle_name);

PlantModel load_plant(const std::string& path);
void save_plant(const PlantModel& plant, const std::string& path);

DynamicsProfile load_profile(const std::string& path);
void save_profile(const DynamicsProfile& profile, const std::string& path);

}  // namespace navsim
