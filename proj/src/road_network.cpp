#include "navsim/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_set>

namespace navsim {

namespace {

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

const std::vector<std::string> kNoRoads;

}  // namespace

void Lane::validate() const {
  if (id.empty()) throw std::invalid_argument("lane id is empty");
  if (centerline.points().size() < 2) {
    throw std::invalid_argument("lane " + id + " centerline needs at least 2 points");
  }
  if (!(centerline.length() > 0.0)) {
    throw std::invalid_argument("lane " + id + " centerline has zero length");
  }
  if (!(width > 0.0)) throw std::invalid_argument("lane " + id + " width must be positive");
  if (!(speed_limit > 0.0)) {
    throw std::invalid_argument("lane " + id + " speed limit must be positive");
  }
}

double Road::length() const {
  if (lanes.empty()) return 0.0;
  return lanes.front().centerline.length();
}

SignalColor signal_for_road(const Junction& junction, const std::string& road_id, double time) {
  if (junction.control != IntersectionControl::stoplight || junction.signal_phases.empty()) {
    return SignalColor::green;
  }
  double period = 0.0;
  for (const SignalPhase& phase : junction.signal_phases) period += phase.duration;
  if (!(period > 0.0)) return SignalColor::green;
  double t = std::fmod(time, period);
  if (t < 0.0) t += period;
  for (const SignalPhase& phase : junction.signal_phases) {
    if (t < phase.duration) {
      const bool allowed = std::find(phase.green_roads.begin(), phase.green_roads.end(),
                                     road_id) != phase.green_roads.end();
      if (!allowed) return SignalColor::red;
      return t < phase.duration - phase.amber_tail ? SignalColor::green : SignalColor::amber;
    }
    t -= phase.duration;
  }
  return SignalColor::red;
}

std::string to_string(ManeuverKind kind) {
  switch (kind) {
    case ManeuverKind::straight: return "straight";
    case ManeuverKind::merge_left: return "merge_left";
    case ManeuverKind::merge_right: return "merge_right";
    case ManeuverKind::left_turn: return "left_turn";
    case ManeuverKind::right_turn: return "right_turn";
  }
  return "unknown";
}

RoadGraph::RoadGraph(std::vector<Junction> junctions, std::vector<Road> roads)
    : junctions_(std::move(junctions)), roads_(std::move(roads)) {
  for (std::size_t i = 0; i < junctions_.size(); ++i) {
    if (!junction_index_.emplace(junctions_[i].id, i).second) {
      throw std::invalid_argument("duplicate junction id: " + junctions_[i].id);
    }
    out_roads_[junctions_[i].id];
    in_roads_[junctions_[i].id];
  }
  for (std::size_t i = 0; i < roads_.size(); ++i) {
    const Road& road = roads_[i];
    if (!road_index_.emplace(road.id, i).second) {
      throw std::invalid_argument("duplicate road id: " + road.id);
    }
    if (road.lanes.empty()) {
      throw std::invalid_argument("road " + road.id + " has no lanes");
    }
    if (!junction_index_.count(road.from_junction) || !junction_index_.count(road.to_junction)) {
      throw std::invalid_argument("road " + road.id + " references an unknown junction");
    }
    out_roads_[road.from_junction].push_back(road.id);
    in_roads_[road.to_junction].push_back(road.id);
    for (std::size_t l = 0; l < road.lanes.size(); ++l) {
      const Lane& lane = road.lanes[l];
      lane.validate();
      if (!lane_index_.emplace(lane.id, std::make_pair(i, l)).second) {
        throw std::invalid_argument("duplicate lane id: " + lane.id);
      }
    }
  }
  // Link checks need the full lane index, so run them in a second pass.
  for (const Road& road : roads_) {
    for (const Lane& lane : road.lanes) {
      for (const std::string& next : lane.successors) {
        const auto it = lane_index_.find(next);
        if (it == lane_index_.end()) {
          throw std::invalid_argument("lane " + lane.id + " has unknown successor " + next);
        }
        const Road& next_road = roads_[it->second.first];
        if (next_road.from_junction != road.to_junction) {
          throw std::invalid_argument("lane " + lane.id + " successor " + next +
                                      " does not depart the road's end junction");
        }
      }
      for (const std::string* side : {&lane.left_lane, &lane.right_lane}) {
        if (side->empty()) continue;
        const auto it = lane_index_.find(*side);
        if (it == lane_index_.end()) {
          throw std::invalid_argument("lane " + lane.id + " has unknown neighbor " + *side);
        }
        if (roads_[it->second.first].id != road.id) {
          throw std::invalid_argument("lane " + lane.id + " neighbor " + *side +
                                      " is on a different road");
        }
      }
    }
  }
}

const Junction& RoadGraph::junction(const std::string& id) const {
  const Junction* j = find_junction(id);
  if (!j) throw std::invalid_argument("unknown junction: " + id);
  return *j;
}

const Road& RoadGraph::road(const std::string& id) const {
  const Road* r = find_road(id);
  if (!r) throw std::invalid_argument("unknown road: " + id);
  return *r;
}

const Lane& RoadGraph::lane(const std::string& id) const {
  const Lane* l = find_lane(id);
  if (!l) throw std::invalid_argument("unknown lane: " + id);
  return *l;
}

const Road& RoadGraph::road_of_lane(const std::string& lane_id) const {
  const auto it = lane_index_.find(lane_id);
  if (it == lane_index_.end()) throw std::invalid_argument("unknown lane: " + lane_id);
  return roads_[it->second.first];
}

const Junction* RoadGraph::find_junction(const std::string& id) const {
  const auto it = junction_index_.find(id);
  return it == junction_index_.end() ? nullptr : &junctions_[it->second];
}

const Road* RoadGraph::find_road(const std::string& id) const {
  const auto it = road_index_.find(id);
  return it == road_index_.end() ? nullptr : &roads_[it->second];
}

const Lane* RoadGraph::find_lane(const std::string& id) const {
  const auto it = lane_index_.find(id);
  return it == lane_index_.end() ? nullptr : &roads_[it->second.first].lanes[it->second.second];
}

const std::vector<std::string>& RoadGraph::roads_out_of(const std::string& junction_id) const {
  const auto it = out_roads_.find(junction_id);
  return it == out_roads_.end() ? kNoRoads : it->second;
}

const std::vector<std::string>& RoadGraph::roads_into(const std::string& junction_id) const {
  const auto it = in_roads_.find(junction_id);
  return it == in_roads_.end() ? kNoRoads : it->second;
}

double signed_turn_angle(const RoadGraph& graph, const std::string& from_road,
                         const std::string& to_road) {
  const Road& from = graph.road(from_road);
  const Road& to = graph.road(to_road);
  const Polyline& from_line = from.lanes.front().centerline;
  const Polyline& to_line = to.lanes.front().centerline;
  const double exit_heading = from_line.heading_at(from_line.length());
  const double entry_heading = to_line.heading_at(0.0);
  return wrap_angle(entry_heading - exit_heading);
}

ManeuverKind classify_transition(double signed_angle) {
  const double magnitude = std::abs(signed_angle);
  if (magnitude < kStraightAngleThreshold) return ManeuverKind::straight;
  if (magnitude <= kTurnAngleThreshold) {
    return signed_angle > 0.0 ? ManeuverKind::merge_left : ManeuverKind::merge_right;
  }
  return signed_angle > 0.0 ? ManeuverKind::left_turn : ManeuverKind::right_turn;
}

namespace {

RoadTransitionManeuver make_maneuver(const RoadGraph& graph, const std::string& from_id,
                                     const std::string& to_id, double route_arclength) {
  const Road& from = graph.road(from_id);
  RoadTransitionManeuver m;
  m.from_road = from_id;
  m.to_road = to_id;
  m.junction = from.to_junction;
  m.trigger_position = from.lanes.front().centerline.point_at(from.length());
  m.route_arclength = route_arclength;
  m.kind = classify_transition(signed_turn_angle(graph, from_id, to_id));
  for (const Lane& lane : from.lanes) {
    bool feeds_destination = false;
    for (const std::string& next : lane.successors) {
      if (graph.road_of_lane(next).id == to_id) {
        feeds_destination = true;
        if (std::find(m.destination_lanes.begin(), m.destination_lanes.end(), next) ==
            m.destination_lanes.end()) {
          m.destination_lanes.push_back(next);
        }
      }
    }
    if (feeds_destination) m.source_lanes.push_back(lane.id);
  }
  if (m.source_lanes.empty()) {
    // No lane-level links declared; any lane may take the transition.
    for (const Lane& lane : from.lanes) m.source_lanes.push_back(lane.id);
    for (const Lane& lane : graph.road(to_id).lanes) m.destination_lanes.push_back(lane.id);
  }
  return m;
}

}  // namespace

std::optional<RoutePlan> plan_route(const RoadGraph& graph, const LanePosition& start,
                                    const LanePosition& goal) {
  const Lane* start_lane = graph.find_lane(start.lane_id);
  const Lane* goal_lane = graph.find_lane(goal.lane_id);
  if (!start_lane || !goal_lane) {
    throw std::invalid_argument("route endpoints must reference known lanes");
  }
  const Road& start_road = graph.road_of_lane(start.lane_id);
  const Road& goal_road = graph.road_of_lane(goal.lane_id);
  const double start_s = std::clamp(start.arclength, 0.0, start_road.length());
  const double goal_s = std::clamp(goal.arclength, 0.0, goal_lane->centerline.length());
  const Vec2 goal_point = goal_lane->centerline.point_at(goal_s);

  RoutePlan plan;
  plan.goal = goal_point;

  if (start_road.id == goal_road.id && goal_s >= start_s - 1e-9) {
    plan.roads = {start_road.id};
    plan.total_length = goal_s - start_s;
    return plan;
  }

  // A* over roads; a state means "about to travel this road from its start
  // junction". g = distance from the ego to that entry point.
  struct Entry {
    double f;
    double g;
    std::string road;
  };
  const auto cmp = [](const Entry& a, const Entry& b) { return a.f > b.f; };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> open(cmp);
  std::unordered_map<std::string, double> best_g;
  std::unordered_map<std::string, std::string> came_from;
  std::unordered_set<std::string> closed;

  const auto heuristic = [&](const std::string& road_id) {
    const Road& r = graph.road(road_id);
    return (graph.junction(r.from_junction).position - goal_point).norm();
  };

  const double start_remaining = start_road.length() - start_s;
  for (const std::string& next : graph.roads_out_of(start_road.to_junction)) {
    best_g[next] = start_remaining;
    open.push({start_remaining + heuristic(next), start_remaining, next});
  }

  while (!open.empty()) {
    const Entry current = open.top();
    open.pop();
    if (closed.count(current.road)) continue;
    closed.insert(current.road);

    if (current.road == goal_road.id) {
      std::vector<std::string> roads{current.road};
      auto it = came_from.find(current.road);
      while (it != came_from.end()) {
        roads.push_back(it->second);
        it = came_from.find(it->second);
      }
      roads.push_back(start_road.id);
      std::reverse(roads.begin(), roads.end());

      plan.roads = roads;
      plan.total_length = current.g + goal_s;
      double cum = start_remaining;
      for (std::size_t i = 0; i + 1 < roads.size(); ++i) {
        plan.maneuvers.push_back(make_maneuver(graph, roads[i], roads[i + 1], cum));
        cum += graph.road(roads[i + 1]).length();
      }
      return plan;
    }

    const Road& road = graph.road(current.road);
    const double g_next = current.g + road.length();
    for (const std::string& next : graph.roads_out_of(road.to_junction)) {
      if (closed.count(next)) continue;
      const auto it = best_g.find(next);
      if (it != best_g.end() && it->second <= g_next) continue;
      best_g[next] = g_next;
      came_from[next] = current.road;
      open.push({g_next + heuristic(next), g_next, next});
    }
  }
  return std::nullopt;
}

const RoadTransitionManeuver* next_maneuver(const RoutePlan& route, double progress) {
  for (const RoadTransitionManeuver& m : route.maneuvers) {
    if (m.route_arclength > progress) return &m;
  }
  return nullptr;
}

BehaviorEvent maneuver_point_event(ManeuverKind kind) {
  switch (kind) {
    case ManeuverKind::straight: return BehaviorEvent::maneuver_point_straight;
    case ManeuverKind::merge_left: return BehaviorEvent::maneuver_point_merge_left;
    case ManeuverKind::merge_right: return BehaviorEvent::maneuver_point_merge_right;
    case ManeuverKind::left_turn: return BehaviorEvent::maneuver_point_left_turn;
    case ManeuverKind::right_turn: return BehaviorEvent::maneuver_point_right_turn;
  }
  return BehaviorEvent::maneuver_point_straight;
}

TransitionResult fsm_transition(BehaviorLabel current, BehaviorEvent event) {
  struct Edge {
    BehaviorLabel from;
    BehaviorEvent event;
    BehaviorLabel to;
  };
  using B = BehaviorLabel;
  using E = BehaviorEvent;
  static const Edge kTable[] = {
      {B::driving_straight, E::maneuver_point_straight, B::driving_straight},
      {B::driving_straight, E::maneuver_point_left_turn, B::turning_left},
      {B::driving_straight, E::maneuver_point_right_turn, B::turning_right},
      {B::driving_straight, E::maneuver_point_merge_left, B::merging_left},
      {B::driving_straight, E::maneuver_point_merge_right, B::merging_right},
      {B::driving_straight, E::lane_change_planned_left, B::merging_left},
      {B::driving_straight, E::lane_change_planned_right, B::merging_right},
      {B::driving_straight, E::stop_required, B::stopped_waiting},
      {B::turning_left, E::maneuver_complete, B::driving_straight},
      {B::turning_right, E::maneuver_complete, B::driving_straight},
      {B::merging_left, E::lane_change_complete, B::driving_straight},
      {B::merging_right, E::lane_change_complete, B::driving_straight},
      {B::merging_left, E::maneuver_complete, B::driving_straight},
      {B::merging_right, E::maneuver_complete, B::driving_straight},
      {B::stopped_waiting, E::cleared_to_go, B::driving_straight},
      {B::stopped_waiting, E::stop_required, B::stopped_waiting},
  };
  for (const Edge& edge : kTable) {
    if (edge.from == current && edge.event == event) return {edge.to, true};
  }
  return {current, false};
}

LaneProjection closest_lane_point(const Lane& lane, const Vec2& p) {
  const Polyline::Projection proj = lane.centerline.closest(p);
  return {proj.point, proj.arclength, proj.distance};
}

double signed_lateral_offset(const Lane& lane, const Vec2& p) {
  const Polyline::Projection proj = lane.centerline.closest(p);
  const double heading = lane.centerline.heading_at(proj.arclength);
  const Vec2 tangent(std::cos(heading), std::sin(heading));
  return cross2(tangent, p - proj.point);
}

const BehaviorOverrides& behavior_overrides(BehaviorLabel behavior) {
  static const BehaviorOverrides kDefault{};
  static const BehaviorOverrides kTurning{4.0, 4.0, true, 0.5};
  switch (behavior) {
    case BehaviorLabel::turning_left:
    case BehaviorLabel::turning_right:
      return kTurning;
    default:
      return kDefault;
  }
}

}  // namespace navsim
