#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "navsim/pid.hpp"
#include "navsim/simulation.hpp"

using namespace navsim;
using nlohmann::json;

namespace {

const DynamicsProfile& hatchback() {
  static const DynamicsProfile profile =
      profile_vehicle(default_plant("hatchback"), hatchback_params()).profile;
  return profile;
}

/// Straight two-lane road (main.0 at y=0, main.1 at y=3.5) of the given
/// length, junctions "west"/"east", plus an optional continuation road
/// "tail" so lane-follow agents can hop roads.
json straight_map(double length, bool with_tail = false) {
  json map = {
      {"junctions", json::array({{{"id", "west"}, {"position", {0.0, 0.0}}},
                                 {{"id", "east"}, {"position", {length, 0.0}}}})},
      {"roads",
       json::array(
           {{{"id", "main"},
             {"from", "west"},
             {"to", "east"},
             {"lanes",
              json::array(
                  {{{"id", "main.0"},
                    {"centerline", {{0.0, 0.0}, {length, 0.0}}},
                    {"left", "main.1"}},
                   {{"id", "main.1"},
                    {"centerline", {{0.0, 3.5}, {length, 3.5}}},
                    {"right", "main.0"}}})}}})}};
  if (with_tail) {
    map["junctions"].push_back({{"id", "far"}, {"position", {length + 80.0, 0.0}}});
    map["roads"].push_back(
        {{"id", "tail"},
         {"from", "east"},
         {"to", "far"},
         {"lanes", json::array({{{"id", "tail.0"},
                                 {"centerline", {{length, 0.0}, {length + 80.0, 0.0}}}}})}});
    map["roads"][0]["lanes"][0]["successors"] = {"tail.0"};
  }
  return map;
}

json idle_ego() {
  return {{"vehicle", "hatchback"},
          {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
          {"speed", 0.0}};
}

Scenario scenario_from(const json& j) { return parse_scenario_text(j.dump(), "inline"); }

double envelope_peak(const DynamicsProfile& profile) {
  double peak = 0.0;
  for (double v = 0.0; v <= profile.v_max; v += 0.25) {
    peak = std::max(peak, std::abs(accel(profile, v, 1.0)));
    peak = std::max(peak, std::abs(accel(profile, v, -1.0)));
  }
  return peak;
}

Vec2 eval_trajectory(const std::vector<TrajectorySample>& samples, double t) {
  if (t <= samples.front().t) return samples.front().position;
  if (t >= samples.back().t) return samples.back().position;
  std::size_t i = 0;
  while (samples[i + 1].t < t) ++i;
  const TrajectorySample& a = samples[i];
  const TrajectorySample& b = samples[i + 1];
  const double alpha = (t - a.t) / (b.t - a.t);
  return (1.0 - alpha) * a.position + alpha * b.position;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("pid with zero error and zero history outputs zero") {
    PidController pid(speed_pid_gains());
    CHECK(pid.update(5.0, 5.0, 0.1) == 0.0);
    CHECK(pid.update(5.0, 5.0, 0.1) == 0.0);
    CHECK(pid.integral() == 0.0);
  }

  TEST_CASE("pure proportional control scales the error") {
    PidController pid(PidGains{0.1, 0.0, 0.0});
    CHECK(pid.update(5.0, 0.0, 0.1) == doctest::Approx(0.5));
  }

  TEST_CASE("pid rejects non-positive dt") {
    PidController pid(speed_pid_gains());
    CHECK_THROWS_AS((void)pid.update(1.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)pid.update(1.0, 0.0, -0.1), std::invalid_argument);
  }

  TEST_CASE("output clamps and the integral freezes while saturated") {
    PidController pid(PidGains{1.0, 1.0, 0.0});
    CHECK(pid.update(100.0, 0.0, 0.1) == 1.0);
    const double frozen = pid.integral();
    for (int i = 0; i < 10; ++i) CHECK(pid.update(100.0, 0.0, 0.1) == 1.0);
    CHECK(pid.integral() == frozen);
  }

  TEST_CASE("speed loop step settles fast without large overshoot") {
    const double dt = 1.0 / 60.0;
    TrackingState tracking;
    tracking.vehicle.speed = 8.0;
    const VehicleParams params = hatchback_params();
    double peak = 0.0;
    double settled_at = -1.0;
    for (int k = 0; k < 60 * 4; ++k) {
      tick_tracking(tracking, 10.0, 0.0, params, hatchback(), dt);
      peak = std::max(peak, tracking.vehicle.speed);
      const bool in_band = std::abs(tracking.vehicle.speed - 10.0) <= 0.02 * 10.0;
      if (!in_band)
        settled_at = -1.0;
      else if (settled_at < 0.0)
        settled_at = (k + 1) * dt;
    }
    REQUIRE(settled_at >= 0.0);
    CHECK(settled_at <= 3.0);
    // Overshoot bounded by 5% of the 2 m/s step.
    CHECK(peak <= 10.0 + 0.05 * 2.0);
  }

  TEST_CASE("make_world places the ego and snaps lane-bound agents") {
    json j = {{"name", "placement"},
              {"map", straight_map(200.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 12.0}}},
                {"speed", 7.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 190.0}}})}}},
              {"agents",
               json::array({{{"id", "bike"},
                             {"type", "cyclist"},
                             {"position", {40.0, -0.8}},
                             {"speed", 4.0},
                             {"script", {{"kind", "lane_follow"}, {"lane", "main.0"}, {"speed", 4.0}}}}})}};
    const Scenario s = scenario_from(j);
    const World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(w.ego.tracking.vehicle.position.x() == doctest::Approx(12.0));
    CHECK(w.ego.tracking.vehicle.position.y() == doctest::Approx(0.0));
    CHECK(w.ego.tracking.vehicle.heading == doctest::Approx(0.0));
    CHECK(w.ego.tracking.vehicle.speed == doctest::Approx(7.0));
    CHECK(w.ego.has_route);
    REQUIRE(w.agents.size() == 1);
    // Lateral offset survives the snap onto the centerline frame.
    CHECK(w.agents[0].position.x() == doctest::Approx(40.0));
    CHECK(w.agents[0].position.y() == doctest::Approx(-0.8));
    CHECK(w.agents[0].neighbor_state().lane == "main.0");
  }

  TEST_CASE("no route means the world holds still") {
    json j = {{"name", "idle"}, {"map", straight_map(100.0)}, {"ego", idle_ego()}};
    const Scenario s = scenario_from(j);
    World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    const Vec2 p0 = w.ego.tracking.vehicle.position;
    const double dt = w.planner.physics_dt;
    for (int k = 0; k < 30; ++k) step_world(w, dt);
    CHECK(w.ego.tracking.vehicle.position.x() == p0.x());
    CHECK(w.ego.tracking.vehicle.position.y() == p0.y());
    CHECK(w.ego.tracking.vehicle.speed == 0.0);
    CHECK(w.ego.tracking.vehicle.steering == 0.0);
    REQUIRE(w.log.rows.size() == 30);
    for (std::size_t i = 1; i < w.log.rows.size(); ++i)
      CHECK(w.log.rows[i].t - w.log.rows[i - 1].t == doctest::Approx(dt));
    CHECK(std::isnan(w.log.rows.back().cost_total));
  }

  TEST_CASE("step_world rejects a dt that does not divide the replan period") {
    json j = {{"name", "dt"}, {"map", straight_map(100.0)}, {"ego", idle_ego()}};
    const Scenario s = scenario_from(j);
    World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK_THROWS_AS(step_world(w, 0.04), std::invalid_argument);
    CHECK_THROWS_AS(step_world(w, -1.0), std::invalid_argument);
    CHECK_NOTHROW(step_world(w, 0.05));
  }

  TEST_CASE("straight empty road: reaches the limit, holds the centerline, stays in envelope") {
    json j = {{"name", "straight"},
              {"timeout", 40.0},
              {"map", straight_map(300.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 10.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 290.0}}})}}}};
    const Scenario s = scenario_from(j);
    const RunResult result = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(result.summary.completed);
    CHECK(result.summary.collisions == 0);
    double top_speed = 0.0;
    double worst_drift = 0.0;
    for (const LogRow& row : result.log.rows) {
      top_speed = std::max(top_speed, row.speed);
      worst_drift = std::max(worst_drift, std::abs(row.position.y()));
    }
    CHECK(top_speed >= 0.98 * 13.4);
    CHECK(top_speed <= 13.4 + 0.2);
    CHECK(worst_drift < 0.1);

    const double dt = result.log.tick_dt;
    const double bound = envelope_peak(hatchback()) + 1e-6;
    for (std::size_t i = 1; i < result.log.rows.size(); ++i) {
      const double dv = result.log.rows[i].speed - result.log.rows[i - 1].speed;
      CHECK(std::abs(dv) / dt <= bound);
    }
  }

  TEST_CASE("executed motion stays on the planned trajectory") {
    json j = {{"name", "tracking"},
              {"timeout", 40.0},
              {"map", straight_map(300.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 10.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 290.0}}})}}},
              {"agents",
               json::array({{{"id", "bike"},
                             {"type", "cyclist"},
                             {"position", {60.0, 0.0}},
                             {"speed", 4.0},
                             {"script", {{"kind", "lane_follow"}, {"lane", "main.0"}, {"speed", 4.0}}}}})}};
    const Scenario s = scenario_from(j);
    World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    const double dt = w.planner.physics_dt;
    double worst = 0.0;
    for (int k = 0; k < 60 * 30 && !w.collided && !w.completed; ++k) {
      step_world(w, dt);
      const EgoRuntime& e = w.ego;
      if (e.last_plan.chosen.trajectory.empty()) continue;
      const double t_rel = w.clock - e.last_plan_time;
      if (t_rel > w.planner.replan_period + 1e-9) continue;
      const Vec2 planned = eval_trajectory(e.last_plan.chosen.trajectory, t_rel);
      worst = std::max(worst, (planned - e.tracking.vehicle.position).norm());
    }
    CHECK(w.completed);
    CHECK(worst < 0.2);
  }

  TEST_CASE("identical seeds give byte-identical logs") {
    json j = {{"name", "determinism"},
              {"timeout", 30.0},
              {"seed", 11},
              {"map", straight_map(220.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 10.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 210.0}}})}}},
              {"agents",
               json::array({{{"id", "bike"},
                             {"type", "cyclist"},
                             {"position", {60.0, -0.5}},
                             {"speed", 4.0},
                             {"script", {{"kind", "lane_follow"}, {"lane", "main.0"}, {"speed", 4.0}}},
                             {"trigger", {{"time", 3.0}}},
                             {"then", {{"kind", "lane_follow"}, {"lane", "main.0"}, {"speed", 1.0}}}}})}};
    const Scenario s = scenario_from(j);
    const RunResult a = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    const RunResult b = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(log_csv_text(a.log) == log_csv_text(b.log));
    CHECK(a.summary.lane_change_count == b.summary.lane_change_count);
    CHECK(a.summary.completed == b.summary.completed);
  }

  TEST_CASE("jaywalking pedestrian: ego yields with clearance and resumes") {
    json j = {{"name", "jaywalk"},
              {"timeout", 45.0},
              {"map", straight_map(200.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 11.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 190.0}}})}}},
              {"agents",
               json::array({{{"id", "walker"},
                             {"type", "pedestrian"},
                             {"position", {90.0, -5.0}},
                             {"heading", 1.5707963267948966},
                             {"script", {{"kind", "stationary"}}},
                             {"trigger", {{"ego_gap", 40.0}}},
                             {"then", {{"kind", "velocity"}, {"velocity", {0.0, 1.4}}}}}})}};
    const Scenario s = scenario_from(j);
    const RunResult result = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(result.summary.completed);
    CHECK(result.summary.collisions == 0);
    REQUIRE(result.summary.min_clearance_by_type.count("pedestrian"));
    CHECK(result.summary.min_clearance_by_type.at("pedestrian") >= 2.0);
    // The ego slowed for the crossing, then got back up to speed.
    double slowest = 1e9;
    for (const LogRow& row : result.log.rows) slowest = std::min(slowest, row.speed);
    CHECK(slowest < 6.0);
    CHECK(result.log.rows.back().speed > 6.0);
  }

  TEST_CASE("slow leader invites an overtake through the free lane") {
    json j = {{"name", "overtake"},
              {"timeout", 45.0},
              {"map", straight_map(300.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 12.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 290.0}}})}}},
              {"agents",
               json::array({{{"id", "slowpoke"},
                             {"type", "vehicle"},
                             {"position", {60.0, 0.0}},
                             {"speed", 4.0},
                             {"script", {{"kind", "lane_follow"}, {"lane", "main.0"}, {"speed", 4.0}}}}})}};
    const Scenario s = scenario_from(j);
    const RunResult result = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(result.summary.completed);
    CHECK(result.summary.collisions == 0);
    CHECK(result.summary.lane_change_count >= 1);
    // Completing on the right lane goal implies the ego came back.
    CHECK(std::abs(result.log.rows.back().position.y()) < 1.75);
  }

  TEST_CASE("all-way stop: full stop at the line, then through") {
    json map = straight_map(140.0, true);
    map["junctions"][1]["control"] = "all_way_stop";
    json j = {{"name", "allway"},
              {"timeout", 45.0},
              {"map", map},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 10.0},
                {"goals", json::array({{{"lane", "tail.0"}, {"arclength", 70.0}}})}}}};
    const Scenario s = scenario_from(j);
    const RunResult result = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(result.summary.completed);
    REQUIRE(!result.summary.stop_events.empty());
    // The standstill happens at the stop line, within the last meters of the road.
    const StopEvent& stop = result.summary.stop_events.front();
    CHECK(stop.position.x() > 130.0);
    CHECK(stop.position.x() < 141.0);
    bool waited = false;
    for (const auto& [t, label] : result.summary.behavior_timeline)
      waited = waited || label == BehaviorLabel::stopped_waiting;
    CHECK(waited);
  }

  TEST_CASE("stoplight: waits out the red, proceeds on green") {
    json map = straight_map(140.0, true);
    map["junctions"][1]["control"] = "stoplight";
    // Red on main until t = 30: long enough for the approach to decay to a
    // standstill at the line before the phase flips.
    map["junctions"][1]["signals"] = json::array({{{"green_roads", json::array({"tail"})},
                                                   {"duration", 30.0},
                                                   {"amber_tail", 2.0}},
                                                  {{"green_roads", json::array({"main"})},
                                                   {"duration", 30.0},
                                                   {"amber_tail", 2.0}}});
    json j = {{"name", "signal"},
              {"timeout", 60.0},
              {"map", map},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 10.0},
                {"goals", json::array({{{"lane", "tail.0"}, {"arclength", 70.0}}})}}}};
    const Scenario s = scenario_from(j);
    const RunResult result = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    CHECK(result.summary.completed);
    bool waited = false;
    double crossed_at = -1.0;
    for (const LogRow& row : result.log.rows) {
      waited = waited || row.behavior == BehaviorLabel::stopped_waiting;
      if (crossed_at < 0.0 && row.position.x() > 140.0) crossed_at = row.t;
    }
    CHECK(waited);
    REQUIRE(crossed_at > 0.0);
    // Nobody crosses the line before the phase flips.
    CHECK(crossed_at >= 30.0);
  }

  TEST_CASE("lane-follow agents track the centerline and hop successors") {
    json j = {{"name", "agents"},
              {"timeout", 30.0},
              {"map", straight_map(140.0, true)},
              {"ego", idle_ego()},
              {"agents",
               json::array({{{"id", "car"},
                             {"type", "vehicle"},
                             {"position", {120.0, 0.4}},
                             {"speed", 10.0},
                             {"script", {{"kind", "lane_follow"}, {"lane", "main.0"}, {"speed", 10.0}}}}})}};
    const Scenario s = scenario_from(j);
    World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    const double dt = w.planner.physics_dt;
    for (int k = 0; k < 60 * 4; ++k) step_world(w, dt);  // 4 s at 10 m/s: 40 m ahead
    CHECK(w.agents[0].position.x() == doctest::Approx(160.0).epsilon(0.01));
    CHECK(w.agents[0].position.y() == doctest::Approx(0.4).epsilon(0.01));
    CHECK(w.agents[0].neighbor_state().lane == "tail.0");
    // Runs out of road at the tail end and parks there.
    for (int k = 0; k < 60 * 8; ++k) step_world(w, dt);
    CHECK(w.agents[0].position.x() == doctest::Approx(220.0).epsilon(0.01));
    CHECK(w.agents[0].speed == 0.0);
  }

  TEST_CASE("timed trigger flips a stationary agent into motion") {
    json j = {{"name", "trigger"},
              {"timeout", 10.0},
              {"map", straight_map(100.0)},
              {"ego", idle_ego()},
              {"agents",
               json::array({{{"id", "walker"},
                             {"type", "pedestrian"},
                             {"position", {50.0, -4.0}},
                             {"script", {{"kind", "stationary"}}},
                             {"trigger", {{"time", 1.0}}},
                             {"then", {{"kind", "velocity"}, {"velocity", {0.0, 1.5}}}}}})}};
    const Scenario s = scenario_from(j);
    World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    const double dt = w.planner.physics_dt;
    for (int k = 0; k < 60; ++k) step_world(w, dt);  // to t=1.0
    CHECK(w.agents[0].position.y() == doctest::Approx(-4.0));
    for (int k = 0; k < 60; ++k) step_world(w, dt);  // to t=2.0
    CHECK(w.agents[0].triggered);
    CHECK(w.agents[0].position.y() == doctest::Approx(-4.0 + 1.5).epsilon(0.02));
  }

  TEST_CASE("waypoint agents replay their keyframes") {
    json j = {{"name", "keyframes"},
              {"timeout", 10.0},
              {"map", straight_map(100.0)},
              {"ego", idle_ego()},
              {"agents",
               json::array({{{"id", "cart"},
                             {"type", "obstruction"},
                             {"position", {0.0, -10.0}},
                             {"script",
                              {{"kind", "waypoints"},
                               {"keyframes",
                                {{{"t", 0.0}, {"position", {0.0, -10.0}}},
                                 {{"t", 2.0}, {"position", {10.0, -10.0}}},
                                 {{"t", 3.0}, {"position", {10.0, -5.0}}}}}}}}})}};
    const Scenario s = scenario_from(j);
    World w = make_world(s, vehicle_preset(s.ego.vehicle), hatchback());
    const double dt = w.planner.physics_dt;
    for (int k = 0; k < 60; ++k) step_world(w, dt);  // t=1.0
    CHECK(w.agents[0].position.x() == doctest::Approx(5.0));
    CHECK(w.agents[0].speed == doctest::Approx(5.0));
    for (int k = 0; k < 90; ++k) step_world(w, dt);  // t=2.5
    CHECK(w.agents[0].position.x() == doctest::Approx(10.0));
    CHECK(w.agents[0].position.y() == doctest::Approx(-7.5));
    for (int k = 0; k < 60; ++k) step_world(w, dt);  // t=3.5, past the last keyframe
    CHECK(w.agents[0].position.y() == doctest::Approx(-5.0));
    CHECK(w.agents[0].speed == 0.0);
  }

  TEST_CASE("csv serialization is rectangular and complete") {
    json j = {{"name", "csv"},
              {"timeout", 20.0},
              {"map", straight_map(120.0)},
              {"ego",
               {{"vehicle", "hatchback"},
                {"start", {{"lane", "main.0"}, {"arclength", 5.0}}},
                {"speed", 8.0},
                {"goals", json::array({{{"lane", "main.0"}, {"arclength", 110.0}}})}}}};
    const Scenario s = scenario_from(j);
    const RunResult result = run_scenario(s, vehicle_preset(s.ego.vehicle), hatchback());
    const std::string text = log_csv_text(result.log);
    std::istringstream lines(text);
    std::string line;
    REQUIRE(std::getline(lines, line));
    const auto count_fields = [](const std::string& row) {
      return 1 + std::count(row.begin(), row.end(), ',');
    };
    const auto expected = count_fields(log_csv_header());
    CHECK(expected == 29);
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      CHECK(count_fields(line) == expected);
      ++rows;
    }
    CHECK(rows == result.log.rows.size());

    const std::string summary = summary_json_text(result.summary);
    CHECK(summary.find("\"completed\": true") != std::string::npos);
  }
}
