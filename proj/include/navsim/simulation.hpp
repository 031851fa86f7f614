#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "navsim/collision.hpp"
#include "navsim/guidance.hpp"
#include "navsim/scenario.hpp"

namespace navsim {

/// Distance from the goal point at which a route leg counts as reached.
inline constexpr double kGoalRadius = 3.0;  // m

/// Live state of one scripted agent. Agents are non-reactive: the only ego
/// input they read is the trigger distance.
struct AgentRuntime {
  AgentSpec spec;
  ConvexPolygon shape = ConvexPolygon::rectangle(1.0, 1.0);  // body frame
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double speed = 0.0;
  double accel = 0.0;  // commanded longitudinal accel, exposed to prediction
  bool triggered = false;
  std::string lane_id;     // non-empty while lane-bound
  double arclength = 0.0;  // along lane_id
  double lateral = 0.0;    // signed offset kept while lane-bound

  const AgentPhase& active_phase() const {
    return triggered && spec.then ? *spec.then : spec.script;
  }
  NeighborState neighbor_state() const;
};

/// One trajectory log row, written every physics tick. Plan fields repeat
/// the latest planning cycle's values; cost terms are the chosen
/// candidate's unweighted terms and are NaN when no cost was computed
/// (emergency fallback, or no route). plan_ms is wall-clock and therefore
/// kept out of the CSV serialization.
struct LogRow {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double speed = 0.0;
  double steering = 0.0;
  double throttle = 0.0;
  double steer = 0.0;
  BehaviorLabel behavior = BehaviorLabel::driving_straight;
  double target_speed = 0.0;
  double target_steering = 0.0;
  double min_neighbor_distance = std::numeric_limits<double>::infinity();
  double cost_vel = 0.0;
  double cost_drift = 0.0;
  double cost_prog = 0.0;
  double cost_accel = 0.0;
  double cost_yaw_rate = 0.0;
  double cost_lane_change = 0.0;
  double cost_wrong_lane = 0.0;
  double cost_proximity = 0.0;
  double cost_total = 0.0;
  int candidates_generated = 0;
  int candidates_infeasible = 0;
  int candidates_blocked = 0;
  int candidates_scored = 0;
  double tau_used = 0.0;
  bool emergency = false;
  bool replanned = false;
  double plan_ms = 0.0;
  bool collision = false;
};

struct TrajectoryLog {
  double tick_dt = 1.0 / 60.0;
  std::vector<LogRow> rows;
};

/// Column names in file order, comma separated.
std::string log_csv_header();
std::string log_csv_text(const TrajectoryLog& log);
void write_log_csv(const TrajectoryLog& log, const std::string& path);

struct StopEvent {
  double begin = 0.0;
  double end = 0.0;
  Vec2 position = Vec2::Zero();
};

struct RunSummary {
  std::string scenario;
  bool completed = false;
  int collisions = 0;
  double duration = 0.0;  // simulated seconds
  std::map<std::string, double> min_clearance_by_type;
  int lane_change_count = 0;
  std::vector<Vec2> lane_change_positions;
  std::vector<StopEvent> stop_events;
  double mean_plan_ms = 0.0;
  double max_plan_ms = 0.0;
  // Minimum speed over ticks with meaningful steering lock, infinity when
  // the run never steers hard.
  double min_cornering_speed = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, BehaviorLabel>> behavior_timeline;
};

std::string summary_json_text(const RunSummary& summary);
void write_summary_json(const RunSummary& summary, const std::string& path);

/// Ego bookkeeping between planning cycles.
struct EgoRuntime {
  TrackingState tracking;
  VehicleParams params;
  DynamicsProfile profile;
  std::vector<LanePosition> goals;
  std::size_t goal_index = 0;
  bool has_route = false;
  RoutePlan route;
  std::size_t route_index = 0;        // into route.roads
  std::vector<double> road_offsets;   // route arclength where each road starts
  std::string lane_id;
  std::optional<std::pair<double, double>> prior;
  double target_speed = 0.0;
  double target_steering = 0.0;
  std::size_t maneuvers_announced = 0;
  std::string pending_lane_change;  // target lane id, empty when none
  bool completed_stop = false;      // all-way stop held until the road advances
  PlanResult last_plan;             // full result of the most recent cycle
  double last_plan_time = 0.0;      // clock when it was planned
  double last_cost_total = 0.0;
};

struct World {
  RoadGraph graph;
  EgoRuntime ego;
  std::vector<AgentRuntime> agents;
  PlannerConfig planner;
  CostWeights weights;
  unsigned seed = 0;
  double clock = 0.0;
  std::uint64_t tick = 0;
  bool collided = false;
  bool completed = false;
  bool route_failed = false;
  TrajectoryLog log;
  // All-way-stop arrival order per junction, head first; the ego appears
  // under its reserved id.
  std::map<std::string, std::vector<std::string>> arrivals;
  // Summary accumulators.
  std::map<std::string, double> min_clearance_by_type;
  std::vector<Vec2> lane_change_positions;
  double plan_ms_sum = 0.0;
  double plan_ms_max = 0.0;
  std::uint64_t plan_count = 0;
};

inline constexpr const char* kEgoId = "__ego";

/// Builds the initial world. Throws ScenarioError when the route cannot be
/// planned.
World make_world(const Scenario& scenario, const VehicleParams& params,
                 const DynamicsProfile& profile);

/// Advances one physics tick: replans on planning-cycle boundaries, steps
/// the ego controllers and agents, detects footprint overlaps, and appends
/// one log row. dt must divide the planner's replan period.
void step_world(World& world, double dt);

struct RunResult {
  TrajectoryLog log;
  RunSummary summary;
};

/// Runs until the last goal, a collision, or the scenario timeout.
RunResult run_scenario(const Scenario& scenario, const VehicleParams& params,
                       const DynamicsProfile& profile);

}  // namespace navsim
