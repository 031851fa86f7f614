#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "navsim/collision.hpp"
#include "navsim/costs.hpp"
#include "navsim/geometry.hpp"
#include "navsim/road_network.hpp"

namespace navsim {

/// Parse or validation failure. Parse errors carry line:column of the
/// offending byte; validation errors carry the JSON path of the bad field.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScriptKind { stationary, lane_follow, velocity, waypoints };

std::string to_string(ScriptKind kind);

struct ScriptKeyframe {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
  std::optional<double> heading;  // absent: face along the segment
};

/// One behavior an agent can run: hold still, follow a lane centerline at a
/// target speed, move at a constant world velocity, or replay keyframes.
struct AgentPhase {
  ScriptKind kind = ScriptKind::stationary;
  std::string lane;             // lane_follow
  double speed = 0.0;           // lane_follow target speed, m/s
  double accel = 3.0;           // lane_follow speed-approach rate, m/s^2
  Vec2 velocity = Vec2::Zero(); // velocity kind, m/s world frame
  std::vector<ScriptKeyframe> keyframes;  // waypoints kind, time-ordered
};

/// Scripted traffic agent. It runs `script` from the start; when a trigger
/// is set it holds that behavior until the trigger fires, then switches to
/// `then`. Agents never react to the ego beyond the trigger condition.
struct AgentSpec {
  std::string id;
  NeighborType type = NeighborType::vehicle;
  double length = 4.4;  // m, footprint
  double width = 1.8;   // m, footprint
  Vec2 position = Vec2::Zero();
  double heading = 0.0;  // rad
  double speed = 0.0;    // m/s, along heading
  AgentPhase script;
  std::optional<AgentPhase> then;
  double trigger_time = -1.0;     // fire when clock >= this; < 0 disabled
  double trigger_ego_gap = -1.0;  // fire when ego within this distance; < 0 disabled
};

struct EgoSpec {
  std::string vehicle = "hatchback";  // preset name: hatchback, sports_car, suv
  LanePosition start;
  double start_speed = 0.0;
  std::vector<LanePosition> goals;  // visited in order; empty: ego idles
};

struct Scenario {
  std::string name;
  unsigned seed = 0;
  double timeout = 120.0;  // s of simulated time
  RoadGraph map;
  EgoSpec ego;
  std::vector<AgentSpec> agents;
  PlannerConfig planner;
  CostWeights weights;
};

Scenario load_scenario_file(const std::string& path);

/// `origin` names the source in error messages (a path or a tag).
Scenario parse_scenario_text(const std::string& text, const std::string& origin);

}  // namespace navsim
