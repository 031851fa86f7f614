#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "navsim/behavior.hpp"
#include "navsim/geometry.hpp"

namespace navsim {

class DynamicsProfile;

/// Static description of an ego vehicle.
struct VehicleParams {
  std::string name;
  double mass = 0.0;           // kg
  double length = 0.0;         // m
  double lf = 0.0;             // m, center of mass to front axle
  double lr = 0.0;             // m, center of mass to rear axle
  double max_steering = 0.0;   // rad
  double max_speed = 0.0;      // m/s
  ConvexPolygon footprint = ConvexPolygon::rectangle(1.0, 1.0);  // body frame, origin at CoM

  double wheelbase() const { return lf + lr; }

  /// Throws std::invalid_argument when any invariant is broken.
  void validate() const;
};

/// Dimensionless control effort pair, both in [-1, 1].
struct ControlInput {
  double throttle = 0.0;
  double steer = 0.0;
};

/// Full kinematic state of a vehicle.
struct VehicleState {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;   // rad
  double speed = 0.0;     // m/s, never negative
  double steering = 0.0;  // rad
  ControlInput controls;
  BehaviorLabel behavior = BehaviorLabel::driving_straight;
};

struct StateDerivative {
  double px_dot = 0.0;
  double py_dot = 0.0;
  double heading_dot = 0.0;
  double speed_dot = 0.0;
  double steering_dot = 0.0;
};

/// Kinematic bicycle-model derivative at the given state. accel and
/// steer_rate are assumed to come from the dynamics envelopes.
StateDerivative derivative(const VehicleState& state, const VehicleParams& params, double accel,
                           double steer_rate);

/// One fixed-step RK4 integration of the bicycle model with generic
/// acceleration and steering-rate envelopes accel_fn(v, u_t) and
/// steer_fn(phi, u_s). Speed is clamped to [0, max_speed] and steering to
/// +-max_steering, both inside stage evaluations and on the result.
template <typename AccelFn, typename SteerFn>
VehicleState step(const VehicleState& state, const VehicleParams& params, AccelFn&& accel_fn,
                  SteerFn&& steer_fn, ControlInput controls, double dt) {
  struct Y {
    double x, y, theta, v, phi;
  };
  const auto eval = [&](const Y& y) {
    const double v = std::clamp(y.v, 0.0, params.max_speed);
    const double phi = std::clamp(y.phi, -params.max_steering, params.max_steering);
    StateDerivative d;
    d.px_dot = v * std::cos(y.theta);
    d.py_dot = v * std::sin(y.theta);
    d.heading_dot = v * std::tan(phi) / params.wheelbase();
    d.speed_dot = accel_fn(v, controls.throttle);
    d.steering_dot = steer_fn(phi, controls.steer);
    return d;
  };
  const auto advance = [](const Y& y, const StateDerivative& d, double h) {
    return Y{y.x + h * d.px_dot, y.y + h * d.py_dot, y.theta + h * d.heading_dot,
             y.v + h * d.speed_dot, y.phi + h * d.steering_dot};
  };

  const Y y0{state.position.x(), state.position.y(), state.heading, state.speed, state.steering};
  const StateDerivative k1 = eval(y0);
  const StateDerivative k2 = eval(advance(y0, k1, dt / 2));
  const StateDerivative k3 = eval(advance(y0, k2, dt / 2));
  const StateDerivative k4 = eval(advance(y0, k3, dt));

  VehicleState out = state;
  out.position.x() = y0.x + dt / 6 * (k1.px_dot + 2 * k2.px_dot + 2 * k3.px_dot + k4.px_dot);
  out.position.y() = y0.y + dt / 6 * (k1.py_dot + 2 * k2.py_dot + 2 * k3.py_dot + k4.py_dot);
  out.heading =
      y0.theta + dt / 6 * (k1.heading_dot + 2 * k2.heading_dot + 2 * k3.heading_dot + k4.heading_dot);
  out.speed = std::clamp(
      y0.v + dt / 6 * (k1.speed_dot + 2 * k2.speed_dot + 2 * k3.speed_dot + k4.speed_dot), 0.0,
      params.max_speed);
  out.steering = std::clamp(
      y0.phi + dt / 6 * (k1.steering_dot + 2 * k2.steering_dot + 2 * k3.steering_dot + k4.steering_dot),
      -params.max_steering, params.max_steering);
  out.controls = controls;
  return out;
}

/// RK4 step with the envelopes of a fitted dynamics profile.
VehicleState step(const VehicleState& state, const VehicleParams& params,
                  const DynamicsProfile& profile, ControlInput controls, double dt);

enum class SteerDirection { left, right, straight };

/// Target steering angle that tracks a circular arc of the given radius,
/// clamped to the vehicle's steering range. Left turns are positive.
double arc_steering(double radius, SteerDirection direction, const VehicleParams& params);

/// Target steering for an arc-or-line guiding geometry.
double arc_steering(const ArcOrLine& geometry, const VehicleParams& params);

/// Built-in vehicle presets.
VehicleParams hatchback_params();
VehicleParams sports_car_params();
VehicleParams suv_params();

/// Preset lookup by name ("hatchback", "sports_car", "suv").
VehicleParams vehicle_preset(const std::string& name);

/// JSON preset file round trip.
VehicleParams load_vehicle_params(const std::string& path);
void save_vehicle_params(const VehicleParams& params, const std::string& path);

}  // namespace navsim
