#include "navsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace navsim {

namespace {

constexpr double kTrialRateHz = 60.0;
constexpr double kTrialDt = 1.0 / kTrialRateHz;
// Below this net acceleration the plant is considered to have topped out.
constexpr double kTopOutAccel = 0.02;
constexpr double kMaxTrialTime = 600.0;

using json = nlohmann::json;

double rk4_speed_step(const PlantModel& plant, double v, double u, double dt) {
  const auto f = [&](double speed) { return plant.longitudinal_accel(speed, u); };
  const double k1 = f(v);
  const double k2 = f(v + 0.5 * dt * k1);
  const double k3 = f(v + 0.5 * dt * k2);
  const double k4 = f(v + dt * k3);
  return v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double field_value(const TrialSample& s, TrialField field) {
  switch (field) {
    case TrialField::time: return s.t;
    case TrialField::speed: return s.speed;
    case TrialField::accel: return s.accel;
    case TrialField::control: return s.control;
    case TrialField::steering: return s.steering;
    case TrialField::steer_rate: return s.steer_rate;
  }
  throw std::invalid_argument("unknown trial field");
}

json curve_to_json(const PiecewiseQuadratic& fn) {
  json coeffs = json::array();
  for (const auto& c : fn.coefficients()) {
    coeffs.push_back({c.x(), c.y(), c.z()});
  }
  return json{{"knots", fn.knots()}, {"coefficients", coeffs}};
}

PiecewiseQuadratic curve_from_json(const json& j) {
  std::vector<double> knots = j.at("knots").get<std::vector<double>>();
  std::vector<Eigen::Vector3d> coeffs;
  for (const auto& c : j.at("coefficients")) {
    if (!c.is_array() || c.size() != 3) {
      throw std::runtime_error("envelope coefficients must be [a, b, c] triples");
    }
    coeffs.emplace_back(c[0].get<double>(), c[1].get<double>(), c[2].get<double>());
  }
  return PiecewiseQuadratic(std::move(knots), std::move(coeffs));
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(std::string("cannot open ") + what + " file: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("malformed ") + what + " file " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path, const char* what) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(std::string("cannot write ") + what + " file: " + path);
  }
  out << j.dump(2) << '\n';
}

}  // namespace

void PlantModel::validate() const {
  if (mass <= 0.0) throw std::invalid_argument("plant mass must be positive");
  if (mu <= 0.0 || mu > 1.5) {
    throw std::invalid_argument("plant friction coefficient must be in (0, 1.5]");
  }
  if (engine_curve.empty()) throw std::invalid_argument("plant engine curve is empty");
  for (std::size_t i = 0; i + 1 < engine_curve.size(); ++i) {
    if (engine_curve[i + 1].x() <= engine_curve[i].x()) {
      throw std::invalid_argument("plant engine curve speeds must be ascending");
    }
  }
  if (brake_force_max < 0.0) throw std::invalid_argument("plant brake force must be nonnegative");
  if (drag_coeff < 0.0) throw std::invalid_argument("plant drag coefficient must be nonnegative");
  if (rolling_resistance < 0.0) {
    throw std::invalid_argument("plant rolling resistance must be nonnegative");
  }
  if (steer_rate_base <= 0.0) throw std::invalid_argument("plant steering rate must be positive");
  if (steer_rate_sat < 0.0 || steer_rate_sat >= 1.0) {
    throw std::invalid_argument("plant steering saturation must be in [0, 1)");
  }
  if (steer_rate_speed_coeff < 0.0) {
    throw std::invalid_argument("plant steering speed coefficient must be nonnegative");
  }
}

double PlantModel::engine_force(double v) const {
  if (engine_curve.empty()) return 0.0;
  if (v <= engine_curve.front().x()) return engine_curve.front().y();
  if (v >= engine_curve.back().x()) return engine_curve.back().y();
  for (std::size_t i = 0; i + 1 < engine_curve.size(); ++i) {
    const auto& a = engine_curve[i];
    const auto& b = engine_curve[i + 1];
    if (v <= b.x()) {
      const double s = (v - a.x()) / (b.x() - a.x());
      return a.y() + s * (b.y() - a.y());
    }
  }
  return engine_curve.back().y();
}

double PlantModel::longitudinal_accel(double v, double u) const {
  const double vv = std::max(v, 0.0);
  const double effort = std::clamp(u, -1.0, 1.0);
  const double resistive = drag_coeff * vv * vv + rolling_resistance;
  double drive = 0.0;
  if (effort >= 0.0) {
    drive = effort * std::min(engine_force(vv), traction_limit());
  } else {
    drive = effort * std::min(brake_force_max, traction_limit());
  }
  return (drive - resistive) / mass;
}

double PlantModel::steer_rate_limit(double phi, double u_s, double v,
                                    double max_steering) const {
  const double effort = std::clamp(u_s, -1.0, 1.0);
  if (effort == 0.0) return 0.0;
  const double sign = effort > 0.0 ? 1.0 : -1.0;
  // The actuator slows as the wheel approaches lock on the commanded side.
  const double toward_lock =
      std::clamp((phi * sign + max_steering) / (2.0 * max_steering), 0.0, 1.0);
  const double factor = 1.0 - steer_rate_sat * toward_lock;
  const double rate =
      steer_rate_base * std::abs(effort) * factor / (1.0 + steer_rate_speed_coeff * v);
  return sign * rate;
}

ProfilingTrials collect_trials(const PlantModel& plant, const VehicleParams& params,
                               const ProfileOptions& options) {
  plant.validate();
  params.validate();
  ProfilingTrials trials;
  const double traction = plant.traction_limit();

  // Full-throttle run from rest toward the vehicle's top speed.
  {
    TrialLog& log = trials.acceleration;
    log.rate_hz = kTrialRateHz;
    double v = 0.0;
    double t = 0.0;
    while (true) {
      const double a = plant.longitudinal_accel(v, 1.0);
      const bool traction_ok = plant.engine_force(v) <= traction + 1e-9;
      if (traction_ok) {
        log.samples.push_back({t, v, a, 1.0, 0.0, 0.0});
      }
      if (v >= params.max_speed - 1e-9) {
        log.reached_target = true;
        break;
      }
      if (a < kTopOutAccel || t > kMaxTrialTime) {
        log.reached_target = false;
        break;
      }
      v = std::min(rk4_speed_step(plant, v, 1.0, kTrialDt), params.max_speed);
      t += kTrialDt;
    }
    log.achieved_max_speed = v;
  }

  // Full-brake run back down to rest.
  {
    TrialLog& log = trials.braking;
    log.rate_hz = kTrialRateHz;
    double v = std::min(params.max_speed, trials.acceleration.achieved_max_speed);
    log.achieved_max_speed = v;
    double t = 0.0;
    while (true) {
      const double a = plant.longitudinal_accel(v, -1.0);
      const bool traction_ok = plant.brake_force_max <= traction + 1e-9;
      if (traction_ok) {
        log.samples.push_back({t, v, a, -1.0, 0.0, 0.0});
      }
      if (v <= 0.0 || t > kMaxTrialTime) break;
      v = std::max(rk4_speed_step(plant, v, -1.0, kTrialDt), 0.0);
      t += kTrialDt;
    }
    log.reached_target = v <= 0.0;
  }

  // Lock-to-lock steering sweeps for each effort grid value, at several
  // constant speeds. Time runs continuously so the log stays uniformly
  // sampled.
  {
    TrialLog& log = trials.steering;
    log.rate_hz = kTrialRateHz;
    double t = 0.0;
    for (double effort : options.steer_effort_grid) {
      for (double speed : options.steer_trial_speeds) {
        double phi = -params.max_steering;
        while (true) {
          const double rate = plant.steer_rate_limit(phi, effort, speed, params.max_steering);
          log.samples.push_back({t, speed, 0.0, effort, phi, rate});
          t += kTrialDt;
          if (phi >= params.max_steering - 1e-12) break;
          phi = std::min(phi + rate * kTrialDt, params.max_steering);
        }
      }
    }
    log.achieved_max_speed =
        options.steer_trial_speeds.empty()
            ? 0.0
            : *std::max_element(options.steer_trial_speeds.begin(),
                                options.steer_trial_speeds.end());
  }

  return trials;
}

PiecewiseQuadratic::PiecewiseQuadratic(std::vector<double> knots,
                                       std::vector<Eigen::Vector3d> coeffs)
    : knots_(std::move(knots)), coeffs_(std::move(coeffs)) {
  if (knots_.size() < 2 || coeffs_.size() + 1 != knots_.size()) {
    throw std::invalid_argument("piecewise quadratic needs one coefficient triple per span");
  }
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (knots_[i + 1] <= knots_[i]) {
      throw std::invalid_argument("piecewise quadratic knots must be ascending");
    }
  }
}

double PiecewiseQuadratic::operator()(double x) const {
  if (coeffs_.empty()) return 0.0;
  const double xc = std::clamp(x, knots_.front(), knots_.back());
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), xc);
  const std::size_t idx = std::min<std::size_t>(
      coeffs_.size() - 1,
      static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - knots_.begin() - 1)));
  const Eigen::Vector3d& c = coeffs_[idx];
  return (c.x() * xc + c.y()) * xc + c.z();
}

FitResult fit_piecewise_quadratic(std::span<const double> x, std::span<const double> y,
                                  int segment_count) {
  if (segment_count < 1) throw std::invalid_argument("segment count must be positive");
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("x and y sample counts differ");
  if (n < static_cast<std::size_t>(3 * segment_count)) {
    throw std::invalid_argument("need at least 3 samples per fitted segment");
  }
  const auto [min_it, max_it] = std::minmax_element(x.begin(), x.end());
  const double x_min = *min_it;
  const double x_max = *max_it;
  if (!(x_max - x_min > 1e-9)) {
    throw std::invalid_argument("sample x range is degenerate");
  }

  std::vector<double> knots(segment_count + 1);
  for (int i = 0; i <= segment_count; ++i) {
    knots[i] = x_min + (x_max - x_min) * static_cast<double>(i) / segment_count;
  }
  const double width = (x_max - x_min) / segment_count;

  std::vector<std::vector<std::size_t>> buckets(segment_count);
  for (std::size_t i = 0; i < n; ++i) {
    const int idx = std::clamp(static_cast<int>((x[i] - x_min) / width), 0, segment_count - 1);
    buckets[idx].push_back(i);
  }

  std::vector<Eigen::Vector3d> coeffs(segment_count);
  for (int seg = 0; seg < segment_count; ++seg) {
    std::vector<std::size_t> rows = buckets[seg];
    if (rows.size() < 3) {
      // Sparse span: fall back to the nearest samples so the solve stays
      // well posed.
      const double mid = 0.5 * (knots[seg] + knots[seg + 1]);
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      std::sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(x[a] - mid) < std::abs(x[b] - mid);
      });
      rows.assign(all.begin(), all.begin() + 3);
    }
    Eigen::MatrixXd A(rows.size(), 3);
    Eigen::VectorXd b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double xi = x[rows[r]];
      A(r, 0) = xi * xi;
      A(r, 1) = xi;
      A(r, 2) = 1.0;
      b(r) = y[rows[r]];
    }
    coeffs[seg] = A.colPivHouseholderQr().solve(b);
  }

  FitResult result{PiecewiseQuadratic(std::move(knots), std::move(coeffs)), 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = result.fn(x[i]) - y[i];
    ss += e * e;
  }
  result.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return result;
}

FitResult fit_piecewise_quadratic(const TrialLog& log, TrialField x_field, TrialField y_field,
                                  int segment_count) {
  std::vector<double> x(log.samples.size());
  std::vector<double> y(log.samples.size());
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    x[i] = field_value(log.samples[i], x_field);
    y[i] = field_value(log.samples[i], y_field);
  }
  return fit_piecewise_quadratic(x, y, segment_count);
}

double accel(const DynamicsProfile& profile, double v, double u_t) {
  const double u = std::clamp(u_t, -1.0, 1.0);
  if (u >= 0.0) {
    return u * std::max(0.0, profile.accel_envelope(v));
  }
  return -u * std::min(0.0, profile.decel_envelope(v));
}

double steer_rate(const DynamicsProfile& profile, double phi, double u_s) {
  const double u = std::clamp(u_s, -1.0, 1.0);
  if (u == 0.0 || profile.steer_family.empty()) return 0.0;
  const double sign = u > 0.0 ? 1.0 : -1.0;
  const double s = std::abs(u);
  // The family is measured for positive efforts; mirror for the other side.
  const double phi_eff = sign > 0.0 ? phi : -phi;

  const auto& family = profile.steer_family;
  double magnitude = 0.0;
  if (s <= family.front().effort) {
    magnitude = s / family.front().effort * family.front().rate_vs_steering(phi_eff);
  } else if (s >= family.back().effort) {
    magnitude = family.back().rate_vs_steering(phi_eff);
  } else {
    std::size_t hi = 1;
    while (hi < family.size() && family[hi].effort < s) ++hi;
    const auto& lo_curve = family[hi - 1];
    const auto& hi_curve = family[hi];
    const double w = (s - lo_curve.effort) / (hi_curve.effort - lo_curve.effort);
    magnitude = (1.0 - w) * lo_curve.rate_vs_steering(phi_eff) +
                w * hi_curve.rate_vs_steering(phi_eff);
  }
  return sign * std::max(0.0, magnitude);
}

double max_safe_speed(const DynamicsProfile& profile, double radius) {
  if (std::isinf(radius)) return profile.v_max;
  if (!(radius > 0.0)) throw std::invalid_argument("turn radius must be positive");
  return std::min(std::sqrt(profile.mu * radius * kGravity), profile.v_max);
}

double max_safe_steering(const DynamicsProfile& profile, const VehicleParams& params,
                         double v) {
  if (v <= 1e-9) return params.max_steering;
  const double phi = std::atan(params.wheelbase() * profile.mu * kGravity / (v * v));
  return std::min(phi, params.max_steering);
}

bool is_feasible(const DynamicsProfile& profile, const VehicleParams& params,
                 const VehicleState& state, ControlInput u) {
  constexpr double kTol = 1e-9;
  if (std::abs(u.throttle) > 1.0 + kTol || std::abs(u.steer) > 1.0 + kTol) return false;
  const double v = state.speed;
  if (v <= kTol) return true;
  if (std::abs(state.steering) > max_safe_steering(profile, params, v) + kTol) return false;
  const double tan_phi = std::tan(std::abs(state.steering));
  if (tan_phi > 1e-12) {
    const double radius = params.wheelbase() / tan_phi;
    if (v > max_safe_speed(profile, radius) + kTol) return false;
  }
  return true;
}

ProfiledDynamics profile_vehicle(const PlantModel& plant, const VehicleParams& params,
                                 const ProfileOptions& options) {
  ProfiledDynamics out;
  out.trials = collect_trials(plant, params, options);

  DynamicsProfile& profile = out.profile;
  profile.vehicle = params.name;
  profile.mu = plant.mu;
  profile.v_max = out.trials.acceleration.achieved_max_speed;

  const FitResult accel_fit = fit_piecewise_quadratic(
      out.trials.acceleration, TrialField::speed, TrialField::accel, options.envelope_segments);
  profile.accel_envelope = accel_fit.fn;
  profile.accel_fit_rms = accel_fit.rms_residual;

  const FitResult decel_fit = fit_piecewise_quadratic(
      out.trials.braking, TrialField::speed, TrialField::accel, options.envelope_segments);
  profile.decel_envelope = decel_fit.fn;
  profile.decel_fit_rms = decel_fit.rms_residual;

  profile.steer_fit_rms = 0.0;
  for (double effort : options.steer_effort_grid) {
    TrialLog slice;
    slice.rate_hz = out.trials.steering.rate_hz;
    for (const TrialSample& s : out.trials.steering.samples) {
      if (s.control == effort) slice.samples.push_back(s);
    }
    const FitResult fit = fit_piecewise_quadratic(slice, TrialField::steering,
                                                  TrialField::steer_rate,
                                                  options.envelope_segments);
    profile.steer_family.push_back({effort, fit.fn});
    profile.steer_fit_rms = std::max(profile.steer_fit_rms, fit.rms_residual);
  }
  std::sort(profile.steer_family.begin(), profile.steer_family.end(),
            [](const SteerRateCurve& a, const SteerRateCurve& b) { return a.effort < b.effort; });
  return out;
}

PlantModel default_plant(const std::string& vehicle_name) {
  PlantModel plant;
  if (vehicle_name == "hatchback") {
    plant.engine_curve = {{0.0, 4800.0}, {8.0, 4800.0}, {70.0, 800.0}};
    plant.brake_force_max = 11000.0;
    plant.drag_coeff = 0.40;
    plant.rolling_resistance = 160.0;
    plant.mu = 0.9;
    plant.mass = 1365.0;
    plant.steer_rate_base = 0.85;
    plant.steer_rate_sat = 0.25;
  } else if (vehicle_name == "sports_car") {
    plant.engine_curve = {{0.0, 9000.0}, {10.0, 9000.0}, {80.0, 1500.0}};
    plant.brake_force_max = 16000.0;
    plant.drag_coeff = 0.38;
    plant.rolling_resistance = 170.0;
    plant.mu = 1.0;
    plant.mass = 1750.0;
    plant.steer_rate_base = 0.95;
    plant.steer_rate_sat = 0.20;
  } else if (vehicle_name == "suv") {
    plant.engine_curve = {{0.0, 6200.0}, {8.0, 6200.0}, {75.0, 1200.0}};
    plant.brake_force_max = 12500.0;
    plant.drag_coeff = 0.55;
    plant.rolling_resistance = 210.0;
    plant.mu = 0.7;
    plant.mass = 1866.0;
    plant.steer_rate_base = 0.65;
    plant.steer_rate_sat = 0.30;
  } else {
    throw std::invalid_argument("unknown plant preset: " + vehicle_name);
  }
  return plant;
}

PlantModel load_plant(const std::string& path) {
  const json j = load_json_file(path, "plant");
  PlantModel plant;
  try {
    for (const auto& p : j.at("engine_curve")) {
      if (!p.is_array() || p.size() != 2) {
        throw std::runtime_error("engine curve entries must be [speed, force] pairs");
      }
      plant.engine_curve.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    plant.brake_force_max = j.at("brake_force_max_n").get<double>();
    plant.drag_coeff = j.at("drag_coeff").get<double>();
    plant.rolling_resistance = j.at("rolling_resistance_n").get<double>();
    plant.mu = j.at("mu").get<double>();
    plant.mass = j.at("mass_kg").get<double>();
    plant.steer_rate_base = j.at("steer_rate_base").get<double>();
    plant.steer_rate_sat = j.at("steer_rate_sat").get<double>();
    plant.steer_rate_speed_coeff = j.value("steer_rate_speed_coeff", 0.0);
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid plant file " + path + ": " + e.what());
  }
  plant.validate();
  return plant;
}

void save_plant(const PlantModel& plant, const std::string& path) {
  json curve = json::array();
  for (const auto& p : plant.engine_curve) curve.push_back({p.x(), p.y()});
  const json j{{"engine_curve", curve},
               {"brake_force_max_n", plant.brake_force_max},
               {"drag_coeff", plant.drag_coeff},
               {"rolling_resistance_n", plant.rolling_resistance},
               {"mu", plant.mu},
               {"mass_kg", plant.mass},
               {"steer_rate_base", plant.steer_rate_base},
               {"steer_rate_sat", plant.steer_rate_sat},
               {"steer_rate_speed_coeff", plant.steer_rate_speed_coeff}};
  write_json_file(j, path, "plant");
}

DynamicsProfile load_profile(const std::string& path) {
  const json j = load_json_file(path, "profile");
  DynamicsProfile profile;
  try {
    profile.vehicle = j.at("vehicle").get<std::string>();
    profile.mu = j.at("mu").get<double>();
    profile.v_max = j.at("v_max_mps").get<double>();
    profile.accel_envelope = curve_from_json(j.at("accel_envelope"));
    profile.decel_envelope = curve_from_json(j.at("decel_envelope"));
    for (const auto& entry : j.at("steer_family")) {
      profile.steer_family.push_back(
          {entry.at("effort").get<double>(), curve_from_json(entry.at("curve"))});
    }
    if (j.contains("fit_rms")) {
      profile.accel_fit_rms = j["fit_rms"].value("accel", 0.0);
      profile.decel_fit_rms = j["fit_rms"].value("decel", 0.0);
      profile.steer_fit_rms = j["fit_rms"].value("steer", 0.0);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid profile file " + path + ": " + e.what());
  }
  if (profile.mu <= 0.0 || profile.v_max <= 0.0) {
    throw std::runtime_error("invalid profile file " + path + ": mu and v_max must be positive");
  }
  std::sort(profile.steer_family.begin(), profile.steer_family.end(),
            [](const SteerRateCurve& a, const SteerRateCurve& b) { return a.effort < b.effort; });
  return profile;
}

void save_profile(const DynamicsProfile& profile, const std::string& path) {
  json family = json::array();
  for (const auto& curve : profile.steer_family) {
    family.push_back({{"effort", curve.effort}, {"curve", curve_to_json(curve.rate_vs_steering)}});
  }
  const json j{{"vehicle", profile.vehicle},
               {"mu", profile.mu},
               {"v_max_mps", profile.v_max},
               {"accel_envelope", curve_to_json(profile.accel_envelope)},
               {"decel_envelope", curve_to_json(profile.decel_envelope)},
               {"steer_family", family},
               {"fit_rms",
                {{"accel", profile.accel_fit_rms},
                 {"decel", profile.decel_fit_rms},
                 {"steer", profile.steer_fit_rms}}}};
  write_json_file(j, path, "profile");
}

}  // namespace navsim
