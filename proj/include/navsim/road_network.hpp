#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "navsim/behavior.hpp"
#include "navsim/geometry.hpp"

namespace navsim {

/// One travel lane. Adjacency and successor links refer to lane ids; an
/// empty id means no neighbor on that side.
struct Lane {
  std::string id;
  Polyline centerline;
  double width = 3.5;        // m
  double speed_limit = 13.4; // m/s
  std::string left_lane;
  std::string right_lane;
  std::vector<std::string> successors;

  void validate() const;
};

/// Directed road between two junctions. All lanes run in the same
/// direction; the first lane is the reference for length and headings.
struct Road {
  std::string id;
  std::string from_junction;
  std::string to_junction;
  std::vector<Lane> lanes;

  double length() const;
};

enum class IntersectionControl { none, stoplight, all_way_stop, yield };

/// One stoplight phase: the listed incoming roads may proceed for
/// `duration` seconds, showing amber for the last `amber_tail` of them.
struct SignalPhase {
  std::vector<std::string> green_roads;
  double duration = 10.0;
  double amber_tail = 2.0;
};

enum class SignalColor { green, amber, red };

struct Junction {
  std::string id;
  Vec2 position = Vec2::Zero();
  IntersectionControl control = IntersectionControl::none;
  std::vector<SignalPhase> signal_phases;
};

/// Light shown to traffic arriving on `road_id` at simulation time `time`.
/// The phase schedule repeats with its total period.
SignalColor signal_for_road(const Junction& junction, const std::string& road_id, double time);

enum class ManeuverKind { straight, merge_left, merge_right, left_turn, right_turn };

std::string to_string(ManeuverKind kind);

/// Road-to-road transition along a planned route. The trigger position sits
/// at the end of the source road's reference centerline.
struct RoadTransitionManeuver {
  std::string from_road;
  std::string to_road;
  std::string junction;
  std::vector<std::string> source_lanes;
  std::vector<std::string> destination_lanes;
  Vec2 trigger_position = Vec2::Zero();
  double route_arclength = 0.0;
  ManeuverKind kind = ManeuverKind::straight;
};

struct RoutePlan {
  std::vector<std::string> roads;
  std::vector<RoadTransitionManeuver> maneuvers;
  Vec2 goal = Vec2::Zero();
  double total_length = 0.0;
};

struct LanePosition {
  std::string lane_id;
  double arclength = 0.0;
};

/// Immutable lane-level road graph with id lookups.
class RoadGraph {
 public:
  RoadGraph() = default;
  RoadGraph(std::vector<Junction> junctions, std::vector<Road> roads);

  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<Road>& roads() const { return roads_; }

  const Junction& junction(const std::string& id) const;
  const Road& road(const std::string& id) const;
  const Lane& lane(const std::string& id) const;
  const Road& road_of_lane(const std::string& lane_id) const;

  const Junction* find_junction(const std::string& id) const;
  const Road* find_road(const std::string& id) const;
  const Lane* find_lane(const std::string& id) const;

  /// Roads departing / arriving at a junction.
  const std::vector<std::string>& roads_out_of(const std::string& junction_id) const;
  const std::vector<std::string>& roads_into(const std::string& junction_id) const;

 private:
  std::vector<Junction> junctions_;
  std::vector<Road> roads_;
  std::unordered_map<std::string, std::size_t> junction_index_;
  std::unordered_map<std::string, std::size_t> road_index_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> lane_index_;
  std::unordered_map<std::string, std::vector<std::string>> out_roads_;
  std::unordered_map<std::string, std::vector<std::string>> in_roads_;
};

// Transition classification thresholds on the signed heading change across a
// junction. Positive angles bend left.
inline constexpr double kStraightAngleThreshold = 15.0 * 3.14159265358979323846 / 180.0;
inline constexpr double kTurnAngleThreshold = 45.0 * 3.14159265358979323846 / 180.0;

/// Signed heading change (radians, CCW positive) from the end of one road to
/// the start of the next.
double signed_turn_angle(const RoadGraph& graph, const std::string& from_road,
                         const std::string& to_road);

ManeuverKind classify_transition(double signed_angle);

/// A* shortest route by road length with a straight-line heuristic. Returns
/// nullopt when the goal is unreachable.
std::optional<RoutePlan> plan_route(const RoadGraph& graph, const LanePosition& start,
                                    const LanePosition& goal);

/// First maneuver whose trigger lies strictly ahead of the given route
/// progress, or nullptr past the last one.
const RoadTransitionManeuver* next_maneuver(const RoutePlan& route, double progress);

enum class BehaviorEvent {
  maneuver_point_straight,
  maneuver_point_left_turn,
  maneuver_point_right_turn,
  maneuver_point_merge_left,
  maneuver_point_merge_right,
  lane_change_planned_left,
  lane_change_planned_right,
  lane_change_complete,
  stop_required,
  cleared_to_go,
  maneuver_complete,
};

BehaviorEvent maneuver_point_event(ManeuverKind kind);

struct TransitionResult {
  BehaviorLabel next = BehaviorLabel::driving_straight;
  bool defined = false;  // false: pair not in the table, state unchanged
};

/// Table-driven behavior state machine.
TransitionResult fsm_transition(BehaviorLabel current, BehaviorEvent event);

struct LaneProjection {
  Vec2 point = Vec2::Zero();
  double arclength = 0.0;
  double distance = 0.0;
};

LaneProjection closest_lane_point(const Lane& lane, const Vec2& p);

/// Lateral offset from the centerline, positive to the left of travel.
double signed_lateral_offset(const Lane& lane, const Vec2& p);

/// Per-behavior planning overrides: cost-weight scaling and candidate
/// steering restrictions consumed by the sampling and cost modules.
struct BehaviorOverrides {
  double drift_weight_scale = 1.0;
  double wrong_lane_weight_scale = 1.0;
  bool restrict_steering_to_arc_side = false;
  double steering_span_scale = 1.0;  // scales the candidate grid's steering extent
};

const BehaviorOverrides& behavior_overrides(BehaviorLabel behavior);

}  // namespace navsim
