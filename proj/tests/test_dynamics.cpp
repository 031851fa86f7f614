#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <vector>

#include "navsim/dynamics.hpp"
#include "navsim/vehicle.hpp"

using namespace navsim;

namespace {

VehicleParams wide_range_params(double wheelbase, double max_steering) {
  VehicleParams p;
  p.name = "fixture";
  p.mass = 1500.0;
  p.length = 4.0;
  p.lf = wheelbase / 2.0;
  p.lr = wheelbase / 2.0;
  p.max_steering = max_steering;
  p.max_speed = 55.0;
  p.footprint = ConvexPolygon::rectangle(4.0, 1.8);
  return p;
}

PlantModel flat_force_plant(double force, double mass, double mu) {
  PlantModel plant;
  plant.engine_curve = {{0.0, force}, {100.0, force}};
  plant.brake_force_max = force;
  plant.drag_coeff = 0.0;
  plant.rolling_resistance = 0.0;
  plant.mu = mu;
  plant.mass = mass;
  plant.steer_rate_base = 0.5;
  plant.steer_rate_sat = 0.0;
  return plant;
}

DynamicsProfile slip_only_profile(double mu) {
  DynamicsProfile profile;
  profile.mu = mu;
  profile.v_max = 1e9;
  return profile;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("piecewise fit recovers an exact quadratic") {
  std::vector<double> x, y;
  for (int i = 0; i <= 200; ++i) {
    const double xi = -1.0 + 2.0 * i / 200.0;
    x.push_back(xi);
    y.push_back(2.0 * xi * xi - xi + 1.0);
  }
  const FitResult fit = fit_piecewise_quadratic(x, y, 1);
  REQUIRE(fit.fn.segment_count() == 1);
  const Eigen::Vector3d c = fit.fn.coefficients()[0];
  CHECK(c.x() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(c.y() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(c.z() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.rms_residual < 1e-9);
}

TEST_CASE("two segments recover both branches of an absolute value") {
  std::vector<double> x, y;
  for (int i = 0; i <= 400; ++i) {
    const double xi = -1.0 + 2.0 * i / 400.0;
    x.push_back(xi);
    y.push_back(std::abs(xi));
  }
  const FitResult fit = fit_piecewise_quadratic(x, y, 2);
  REQUIRE(fit.fn.segment_count() == 2);
  CHECK(fit.fn.knots()[1] == doctest::Approx(0.0).epsilon(1e-12));
  const Eigen::Vector3d left = fit.fn.coefficients()[0];
  const Eigen::Vector3d right = fit.fn.coefficients()[1];
  CHECK(std::abs(left.x()) < 1e-9);
  CHECK(left.y() == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(left.z()) < 1e-9);
  CHECK(std::abs(right.x()) < 1e-9);
  CHECK(right.y() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(right.z()) < 1e-9);
  CHECK(fit.rms_residual < 1e-9);
}

TEST_CASE("noisy quadratic fits within the noise floor") {
  std::mt19937 rng(20240817u);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> x, y;
  for (int i = 0; i <= 1000; ++i) {
    const double xi = i / 1000.0 * 10.0;
    x.push_back(xi);
    y.push_back(0.3 * xi * xi - 2.0 * xi + 5.0 + noise(rng));
  }
  const FitResult fit = fit_piecewise_quadratic(x, y, 4);
  CHECK(fit.rms_residual <= 0.02);
}

TEST_CASE("fit rejects unusable sample sets") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y{0.0, 1.0, 4.0, 9.0, 16.0};
  CHECK_THROWS_AS(fit_piecewise_quadratic(x, y, 2), std::invalid_argument);

  const std::vector<double> flat_x(12, 3.0);
  const std::vector<double> flat_y(12, 1.0);
  CHECK_THROWS_AS(fit_piecewise_quadratic(flat_x, flat_y, 1), std::invalid_argument);

  const std::vector<double> short_y{0.0, 1.0};
  CHECK_THROWS_AS(fit_piecewise_quadratic(x, short_y, 1), std::invalid_argument);
}

TEST_CASE("drag-free constant-force plant accelerates at F over m") {
  const PlantModel plant = flat_force_plant(3000.0, 1500.0, 0.9);
  const VehicleParams params = wide_range_params(2.7, 1.0);
  const ProfilingTrials trials = collect_trials(plant, params);

  REQUIRE(!trials.acceleration.samples.empty());
  for (const TrialSample& s : trials.acceleration.samples) {
    CHECK(s.accel == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.control == 1.0);
  }
  CHECK(trials.acceleration.reached_target);
  CHECK(trials.acceleration.achieved_max_speed == doctest::Approx(params.max_speed));
}

TEST_CASE("drag makes the throttle envelope strictly decreasing") {
  const PlantModel plant = default_plant("hatchback");
  const VehicleParams params = hatchback_params();
  const ProfilingTrials trials = collect_trials(plant, params);

  const auto& samples = trials.acceleration.samples;
  REQUIRE(samples.size() > 100);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    CHECK(samples[i].speed > samples[i - 1].speed);
    CHECK(samples[i].accel < samples[i - 1].accel);
  }
}

TEST_CASE("braking trial runs down to a standstill") {
  const PlantModel plant = default_plant("suv");
  const VehicleParams params = suv_params();
  const ProfilingTrials trials = collect_trials(plant, params);

  REQUIRE(!trials.braking.samples.empty());
  CHECK(trials.braking.samples.front().speed ==
        doctest::Approx(trials.acceleration.achieved_max_speed));
  CHECK(trials.braking.samples.back().speed == 0.0);
  for (const TrialSample& s : trials.braking.samples) {
    CHECK(s.accel < 0.0);
    CHECK(s.control == -1.0);
  }
}

TEST_CASE("trial logs are uniformly sampled at 60 Hz") {
  const PlantModel plant = default_plant("sports_car");
  const VehicleParams params = sports_car_params();
  const ProfilingTrials trials = collect_trials(plant, params);

  for (const TrialLog* log : {&trials.acceleration, &trials.braking, &trials.steering}) {
    REQUIRE(log->samples.size() > 10);
    CHECK(log->rate_hz == doctest::Approx(60.0));
    for (std::size_t i = 1; i < log->samples.size(); ++i) {
      const double dt = log->samples[i].t - log->samples[i - 1].t;
      CHECK(dt == doctest::Approx(1.0 / 60.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("a weak plant tops out below the vehicle limit") {
  PlantModel plant = default_plant("hatchback");
  plant.engine_curve = {{0.0, 2000.0}, {40.0, 500.0}, {100.0, 500.0}};
  const VehicleParams params = hatchback_params();
  const ProfilingTrials trials = collect_trials(plant, params);

  CHECK(!trials.acceleration.reached_target);
  CHECK(trials.acceleration.achieved_max_speed < 40.0);
  CHECK(trials.acceleration.achieved_max_speed > 10.0);
  // Braking starts from whatever the throttle run actually achieved.
  CHECK(trials.braking.samples.front().speed ==
        doctest::Approx(trials.acceleration.achieved_max_speed));
}

TEST_CASE("samples beyond the traction budget are excluded") {
  PlantModel plant = default_plant("hatchback");
  // Below ~21 m/s the commanded engine force exceeds mu m g; those samples
  // must not appear in the log even though the car still moves.
  plant.engine_curve = {{0.0, 15000.0}, {20.0, 15000.0}, {21.0, 4000.0}, {100.0, 3000.0}};
  plant.mu = 0.5;
  const VehicleParams params = hatchback_params();
  const double budget = plant.traction_limit();
  const ProfilingTrials trials = collect_trials(plant, params);

  REQUIRE(!trials.acceleration.samples.empty());
  for (const TrialSample& s : trials.acceleration.samples) {
    CHECK(plant.engine_force(s.speed) <= budget + 1e-6);
  }
  CHECK(trials.acceleration.samples.front().speed > 15.0);
}

TEST_CASE("profiled envelopes track the plant within two percent of peak") {
  for (const auto* name : {"hatchback", "sports_car", "suv"}) {
    CAPTURE(name);
    const PlantModel plant = default_plant(name);
    const VehicleParams params = vehicle_preset(name);
    const ProfiledDynamics result = profile_vehicle(plant, params);
    const DynamicsProfile& profile = result.profile;

    CHECK(profile.vehicle == name);
    CHECK(profile.mu == doctest::Approx(plant.mu));
    CHECK(profile.v_max > 30.0);

    double accel_peak = 0.0;
    double decel_peak = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double v = profile.v_max * i / 400.0;
      const double a = profile.accel_envelope(v);
      const double d = profile.decel_envelope(v);
      CHECK(a >= -1e-6);
      CHECK(d <= 1e-6);
      accel_peak = std::max(accel_peak, std::abs(a));
      decel_peak = std::max(decel_peak, std::abs(d));
    }
    CHECK(profile.accel_fit_rms <= 0.02 * accel_peak);
    CHECK(profile.decel_fit_rms <= 0.02 * decel_peak);

    double steer_peak = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double phi = -params.max_steering + 2.0 * params.max_steering * i / 200.0;
      steer_peak = std::max(steer_peak, std::abs(steer_rate(profile, phi, 1.0)));
    }
    CHECK(profile.steer_fit_rms <= 0.02 * steer_peak);

    // Fitted full-throttle capability never ticks upward with speed by more
    // than fit noise.
    double prev = profile.accel_envelope(0.0);
    for (int i = 1; i <= 400; ++i) {
      const double v = profile.v_max * i / 400.0;
      const double a = profile.accel_envelope(v);
      CHECK(a <= prev + 0.01 * accel_peak);
      prev = a;
    }

    // Independent per-segment fits still line up at the seams.
    const auto& knots = profile.accel_envelope.knots();
    for (std::size_t k = 1; k + 1 < knots.size(); ++k) {
      const double jump = std::abs(profile.accel_envelope(knots[k] - 1e-9) -
                                   profile.accel_envelope(knots[k] + 1e-9));
      CHECK(jump <= 0.02 * accel_peak);
    }
  }
}

TEST_CASE("throttle scales linearly between rest and the envelope") {
  const ProfiledDynamics result =
      profile_vehicle(default_plant("hatchback"), hatchback_params());
  const DynamicsProfile& profile = result.profile;

  for (double v : {0.0, 5.0, 17.0, 30.0, 45.0}) {
    CAPTURE(v);
    CHECK(accel(profile, v, 0.0) == 0.0);
    CHECK(accel(profile, v, 1.0) == doctest::Approx(profile.accel_envelope(v)).epsilon(1e-12));
    CHECK(accel(profile, v, 0.5) ==
          doctest::Approx(0.5 * profile.accel_envelope(v)).epsilon(1e-12));
    CHECK(accel(profile, v, -1.0) == doctest::Approx(profile.decel_envelope(v)).epsilon(1e-12));
    CHECK(accel(profile, v, -0.4) ==
          doctest::Approx(0.4 * profile.decel_envelope(v)).epsilon(1e-12));
    CHECK(accel(profile, v, 1.0) >= 0.0);
    CHECK(accel(profile, v, -1.0) < 0.0);
  }
}

TEST_CASE("steering rate follows the fitted family with sign symmetry") {
  const ProfiledDynamics result =
      profile_vehicle(default_plant("sports_car"), sports_car_params());
  const DynamicsProfile& profile = result.profile;
  REQUIRE(profile.steer_family.size() == 4);

  for (double phi : {-0.9, -0.3, 0.0, 0.4, 0.8}) {
    CAPTURE(phi);
    CHECK(steer_rate(profile, phi, 0.0) == 0.0);
    // Full effort evaluates the top fitted curve directly.
    CHECK(steer_rate(profile, phi, 1.0) ==
          doctest::Approx(profile.steer_family.back().rate_vs_steering(phi)).epsilon(1e-12));
    // Grid efforts evaluate their own curves, not a scaled copy.
    CHECK(steer_rate(profile, phi, 0.5) ==
          doctest::Approx(profile.steer_family[1].rate_vs_steering(phi)).epsilon(1e-12));
    // Below the lowest grid point the rate ramps linearly from zero.
    CHECK(steer_rate(profile, phi, 0.125) ==
          doctest::Approx(0.5 * profile.steer_family.front().rate_vs_steering(phi))
              .epsilon(1e-12));
    for (double u : {0.2, 0.6, 1.0}) {
      CHECK(steer_rate(profile, phi, -u) ==
            doctest::Approx(-steer_rate(profile, -phi, u)).epsilon(1e-12));
    }
    CHECK(steer_rate(profile, phi, 1.0) > 0.0);
    CHECK(steer_rate(profile, phi, -1.0) < 0.0);
  }
}

TEST_CASE("cornering speed follows the friction circle") {
  const DynamicsProfile unit = slip_only_profile(1.0);
  CHECK(max_safe_speed(unit, 9.81) == doctest::Approx(9.81).epsilon(1e-12));

  const DynamicsProfile half = slip_only_profile(0.5);
  CHECK(max_safe_speed(half, 40.0) / max_safe_speed(unit, 40.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  DynamicsProfile capped = slip_only_profile(1.0);
  capped.v_max = 55.0;
  CHECK(max_safe_speed(capped, std::numeric_limits<double>::infinity()) == doctest::Approx(55.0));
  CHECK(max_safe_speed(capped, 1e7) == doctest::Approx(55.0));
  CHECK_THROWS_AS(max_safe_speed(capped, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(max_safe_speed(capped, -3.0), std::invalid_argument);
}

TEST_CASE("steering limit follows the lateral slip bound") {
  const VehicleParams params = wide_range_params(2.7, 1.2);
  const DynamicsProfile profile = slip_only_profile(0.9);

  const double phi = max_safe_steering(profile, params, 10.0);
  CHECK(phi == doctest::Approx(std::atan(2.7 * 0.9 * 9.81 / 100.0)).epsilon(1e-12));
  CHECK(phi == doctest::Approx(0.2340).epsilon(1e-3));

  CHECK(max_safe_steering(profile, params, 0.0) == doctest::Approx(params.max_steering));
  CHECK(max_safe_steering(profile, params, 1e-12) == doctest::Approx(params.max_steering));
  // Low speeds clamp at the mechanical range, high speeds fall below it.
  CHECK(max_safe_steering(profile, params, 2.0) == doctest::Approx(params.max_steering));
  CHECK(max_safe_steering(profile, params, 40.0) < params.max_steering);
}

TEST_CASE("slip speed and slip steering invert each other") {
  const VehicleParams params = wide_range_params(2.7, 1.5);
  std::mt19937 rng(77u);
  std::uniform_real_distribution<double> mu_dist(0.3, 1.2);
  std::uniform_real_distribution<double> r_dist(5.0, 200.0);

  for (int i = 0; i < 100; ++i) {
    const double mu = mu_dist(rng);
    const double radius = r_dist(rng);
    CAPTURE(mu);
    CAPTURE(radius);
    const DynamicsProfile profile = slip_only_profile(mu);
    const double v = max_safe_speed(profile, radius);
    const double phi = max_safe_steering(profile, params, v);
    CHECK(std::abs(phi - arc_steering(radius, SteerDirection::left, params)) <= 1e-9);
  }
}

TEST_CASE("feasibility gate matches the slip limits") {
  const VehicleParams params = hatchback_params();
  const ProfiledDynamics result = profile_vehicle(default_plant("hatchback"), params);
  const DynamicsProfile& profile = result.profile;

  VehicleState state;
  state.speed = 15.0;
  state.steering = 0.05;
  CHECK(is_feasible(profile, params, state, {0.0, 0.0}));
  CHECK(is_feasible(profile, params, state, {1.0, 1.0}));
  CHECK(!is_feasible(profile, params, state, {1.5, 0.0}));
  CHECK(!is_feasible(profile, params, state, {0.0, -1.01}));

  // Full lock is infeasible once the slip bound drops below the mechanical
  // range.
  VehicleState fast;
  fast.speed = 50.0;
  fast.steering = params.max_steering;
  REQUIRE(max_safe_steering(profile, params, fast.speed) < params.max_steering);
  CHECK(!is_feasible(profile, params, fast, {0.0, 0.0}));

  VehicleState rest;
  rest.speed = 0.0;
  rest.steering = params.max_steering;
  CHECK(is_feasible(profile, params, rest, {1.0, 1.0}));
}

TEST_CASE("feasible controls respect the plant friction budget") {
  const VehicleParams params = hatchback_params();
  const PlantModel plant = default_plant("hatchback");
  const ProfiledDynamics result = profile_vehicle(plant, params);
  const DynamicsProfile& profile = result.profile;
  const double budget = plant.traction_limit();

  std::mt19937 rng(4242u);
  std::uniform_real_distribution<double> v_dist(0.0, profile.v_max);
  std::uniform_real_distribution<double> phi_dist(-params.max_steering, params.max_steering);
  std::uniform_real_distribution<double> u_dist(-1.0, 1.0);

  int accepted = 0;
  for (int i = 0; i < 2000; ++i) {
    VehicleState state;
    state.speed = v_dist(rng);
    state.steering = phi_dist(rng);
    const ControlInput u{u_dist(rng), u_dist(rng)};
    if (!is_feasible(profile, params, state, u)) continue;
    ++accepted;

    // Tire lateral force under the kinematic model's centripetal demand.
    const double lateral =
        plant.mass * state.speed * state.speed * std::tan(std::abs(state.steering)) /
        params.wheelbase();
    CHECK(lateral <= budget * (1.0 + 1e-9));

    // Longitudinal tire force recovered from the profiled acceleration plus
    // the plant's resistive terms; allow the envelope fit tolerance.
    const double a = accel(profile, state.speed, u.throttle);
    const double resistive =
        plant.drag_coeff * state.speed * state.speed + plant.rolling_resistance;
    const double tire_force =
        u.throttle >= 0.0 ? plant.mass * a + resistive : plant.mass * a + resistive;
    CHECK(std::abs(tire_force) <= budget * 1.02);
  }
  // Uniform draws over the full speed and steering ranges mostly violate the
  // slip bound; a few hundred survivors still cover the budget check.
  CHECK(accepted > 200);
}

TEST_CASE("plant and profile files survive a JSON round trip") {
  const std::string plant_path = "plant_roundtrip_test.json";
  const std::string profile_path = "profile_roundtrip_test.json";

  const PlantModel plant = default_plant("suv");
  save_plant(plant, plant_path);
  const PlantModel plant2 = load_plant(plant_path);
  std::remove(plant_path.c_str());
  CHECK(plant2.mass == doctest::Approx(plant.mass).epsilon(1e-12));
  CHECK(plant2.mu == doctest::Approx(plant.mu).epsilon(1e-12));
  CHECK(plant2.brake_force_max == doctest::Approx(plant.brake_force_max).epsilon(1e-12));
  REQUIRE(plant2.engine_curve.size() == plant.engine_curve.size());
  for (std::size_t i = 0; i < plant.engine_curve.size(); ++i) {
    CHECK((plant2.engine_curve[i] - plant.engine_curve[i]).norm() == 0.0);
  }

  const ProfiledDynamics result = profile_vehicle(plant, suv_params());
  save_profile(result.profile, profile_path);
  const DynamicsProfile loaded = load_profile(profile_path);
  std::remove(profile_path.c_str());

  CHECK(loaded.vehicle == result.profile.vehicle);
  CHECK(loaded.mu == result.profile.mu);
  CHECK(loaded.v_max == result.profile.v_max);
  REQUIRE(loaded.steer_family.size() == result.profile.steer_family.size());
  for (double v : {0.0, 7.5, 21.0, 38.0}) {
    CHECK(loaded.accel_envelope(v) == result.profile.accel_envelope(v));
    CHECK(loaded.decel_envelope(v) == result.profile.decel_envelope(v));
  }
  for (double phi : {-0.8, -0.2, 0.3, 0.7}) {
    CHECK(steer_rate(loaded, phi, 0.65) == steer_rate(result.profile, phi, 0.65));
  }
}

TEST_CASE("plant validation rejects out-of-range parameters") {
  PlantModel plant = default_plant("hatchback");
  CHECK_NOTHROW(plant.validate());

  SUBCASE("friction must be physical") {
    plant.mu = 0.0;
    CHECK_THROWS_AS(plant.validate(), std::invalid_argument);
    plant.mu = 1.6;
    CHECK_THROWS_AS(plant.validate(), std::invalid_argument);
  }
  SUBCASE("engine curve must be ascending in speed") {
    plant.engine_curve = {{10.0, 3000.0}, {5.0, 2000.0}};
    CHECK_THROWS_AS(plant.validate(), std::invalid_argument);
  }
  SUBCASE("mass must be positive") {
    plant.mass = -1.0;
    CHECK_THROWS_AS(plant.validate(), std::invalid_argument);
  }
}

}  // TEST_SUITE
