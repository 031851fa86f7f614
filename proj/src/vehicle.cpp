#include "navsim/vehicle.hpp"

#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "navsim/dynamics.hpp"

namespace navsim {

std::string_view to_string(BehaviorLabel b) {
  switch (b) {
    case BehaviorLabel::driving_straight: return "driving_straight";
    case BehaviorLabel::turning_left: return "turning_left";
    case BehaviorLabel::turning_right: return "turning_right";
    case BehaviorLabel::merging_left: return "merging_left";
    case BehaviorLabel::merging_right: return "merging_right";
    case BehaviorLabel::stopped_waiting: return "stopped_waiting";
  }
  return "unknown";
}

void VehicleParams::validate() const {
  if (lf <= 0.0 || lr <= 0.0) throw std::invalid_argument("axle distances must be positive");
  if (max_steering <= 0.0 || max_steering >= std::numbers::pi / 2)
    throw std::invalid_argument("max steering must be in (0, pi/2)");
  if (max_speed <= 0.0) throw std::invalid_argument("max speed must be positive");
  if (mass <= 0.0) throw std::invalid_argument("mass must be positive");
  double min_x = 0.0;
  double max_x = 0.0;
  for (const Vec2& v : footprint.vertices()) {
    min_x = std::min(min_x, v.x());
    max_x = std::max(max_x, v.x());
  }
  if (std::abs((max_x - min_x) - length) > 1e-6)
    throw std::invalid_argument("footprint extent inconsistent with vehicle length");
}

StateDerivative derivative(const VehicleState& state, const VehicleParams& params, double accel,
                           double steer_rate) {
  StateDerivative d;
  d.px_dot = state.speed * std::cos(state.heading);
  d.py_dot = state.speed * std::sin(state.heading);
  d.heading_dot = state.speed * std::tan(state.steering) / params.wheelbase();
  d.speed_dot = accel;
  d.steering_dot = steer_rate;
  return d;
}

VehicleState step(const VehicleState& state, const VehicleParams& params,
                  const DynamicsProfile& profile, ControlInput controls, double dt) {
  return step(
      state, params, [&](double v, double ut) { return accel(profile, v, ut); },
      [&](double phi, double us) { return steer_rate(profile, phi, us); }, controls, dt);
}

double arc_steering(double radius, SteerDirection direction, const VehicleParams& params) {
  if (direction == SteerDirection::straight) return 0.0;
  if (radius <= 0.0) throw std::invalid_argument("arc radius must be positive");
  const double magnitude = std::min(std::atan(params.wheelbase() / radius), params.max_steering);
  return direction == SteerDirection::left ? magnitude : -magnitude;
}

double arc_steering(const ArcOrLine& geometry, const VehicleParams& params) {
  if (!geometry.is_arc()) return 0.0;
  return arc_steering(geometry.radius,
                      geometry.direction == TurnDirection::left ? SteerDirection::left
                                                                : SteerDirection::right,
                      params);
}

namespace {

VehicleParams make_params(std::string name, double mass, double length, double width,
                          double max_steering_deg) {
  VehicleParams p;
  p.name = std::move(name);
  p.mass = mass;
  p.length = length;
  p.lf = 0.35 * length;
  p.lr = 0.35 * length;
  p.max_steering = max_steering_deg * std::numbers::pi / 180.0;
  p.max_speed = 55.0;
  p.footprint = ConvexPolygon::rectangle(length, width);
  return p;
}

}  // namespace

VehicleParams hatchback_params() { return make_params("hatchback", 1365.0, 3.8, 1.76, 60.0); }
VehicleParams sports_car_params() { return make_params("sports_car", 1750.0, 4.6, 1.85, 63.0); }
VehicleParams suv_params() { return make_params("suv", 1866.0, 4.8, 1.92, 55.0); }

VehicleParams vehicle_preset(const std::string& name) {
  if (name == "hatchback") return hatchback_params();
  if (name == "sports_car") return sports_car_params();
  if (name == "suv") return suv_params();
  throw std::invalid_argument("unknown vehicle preset: " + name);
}

VehicleParams load_vehicle_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vehicle preset: " + path);
  nlohmann::json j;
  in >> j;

  VehicleParams p;
  p.name = j.at("name").get<std::string>();
  p.mass = j.at("mass_kg").get<double>();
  p.length = j.at("length_m").get<double>();
  p.lf = j.at("lf_m").get<double>();
  p.lr = j.at("lr_m").get<double>();
  p.max_steering = j.at("max_steering_rad").get<double>();
  p.max_speed = j.at("max_speed_mps").get<double>();
  std::vector<Vec2> verts;
  for (const auto& v : j.at("footprint")) verts.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
  p.footprint = ConvexPolygon(std::move(verts));
  p.validate();
  return p;
}

void save_vehicle_params(const VehicleParams& params, const std::string& path) {
  nlohmann::json j;
  j["name"] = params.name;
  j["mass_kg"] = params.mass;
  j["length_m"] = params.length;
  j["lf_m"] = params.lf;
  j["lr_m"] = params.lr;
  j["max_steering_rad"] = params.max_steering;
  j["max_speed_mps"] = params.max_speed;
  auto& fp = j["footprint"] = nlohmann::json::array();
  for (const Vec2& v : params.footprint.vertices()) fp.push_back({v.x(), v.y()});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vehicle preset: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace navsim
