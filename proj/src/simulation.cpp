#include "navsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace navsim {

namespace {

constexpr double kAdvanceMargin = 0.2;       // m before a lane end that counts as crossed
// A vehicle held at a stop line rests just short of the stop-target cutoff
// radius; it must not cross the advance threshold there, or the junction
// control stops applying while the light is still red.
static_assert(kAdvanceMargin < kStopCutoffDistance);
constexpr double kStopZone = 40.0;           // m, stop handling engages inside this
constexpr double kArrivalRadius = 15.0;      // m, all-way-stop queue entry
constexpr double kDepartureRadius = 20.0;    // m, all-way-stop queue exit
constexpr double kJunctionCore = 7.0;        // m, occupied-junction check
constexpr double kYieldZone = 25.0;          // m, yield cross-traffic check
constexpr double kSensingRange = 80.0;       // m, neighbors visible to the planner
constexpr double kStoppedSpeed = 0.2;        // m/s, counts as a standstill
constexpr double kCorneringSteering = 0.04;  // rad, counts as steering lock

Vec2 left_normal(double heading) { return Vec2(-std::sin(heading), std::cos(heading)); }

void place_on_lane(AgentRuntime& a, const Lane& lane) {
  const double s = std::clamp(a.arclength, 0.0, lane.centerline.length());
  a.heading = lane.centerline.heading_at(s);
  a.position = lane.centerline.point_at(s) + a.lateral * left_normal(a.heading);
}

void init_phase(AgentRuntime& a, const AgentPhase& phase, const RoadGraph& graph) {
  a.lane_id.clear();
  a.accel = 0.0;
  switch (phase.kind) {
    case ScriptKind::stationary:
      a.speed = 0.0;
      break;
    case ScriptKind::lane_follow: {
      const Lane& lane = graph.lane(phase.lane);
      const LaneProjection proj = closest_lane_point(lane, a.position);
      a.lane_id = phase.lane;
      a.arclength = proj.arclength;
      a.lateral = signed_lateral_offset(lane, a.position);
      place_on_lane(a, lane);
      break;
    }
    case ScriptKind::velocity:
      a.speed = phase.velocity.norm();
      if (a.speed > 1e-9) a.heading = std::atan2(phase.velocity.y(), phase.velocity.x());
      break;
    case ScriptKind::waypoints:
      break;
  }
}

void follow_keyframes(AgentRuntime& a, const std::vector<ScriptKeyframe>& frames, double t) {
  if (t <= frames.front().t) {
    a.position = frames.front().position;
    if (frames.front().heading) a.heading = *frames.front().heading;
    a.speed = 0.0;
    return;
  }
  if (t >= frames.back().t) {
    a.position = frames.back().position;
    if (frames.back().heading) a.heading = *frames.back().heading;
    a.speed = 0.0;
    return;
  }
  std::size_t i = 0;
  while (frames[i + 1].t < t) ++i;
  const ScriptKeyframe& f0 = frames[i];
  const ScriptKeyframe& f1 = frames[i + 1];
  const double span = f1.t - f0.t;
  const double alpha = (t - f0.t) / span;
  const Vec2 delta = f1.position - f0.position;
  a.position = f0.position + alpha * delta;
  a.speed = delta.norm() / span;
  if (f0.heading)
    a.heading = *f0.heading;
  else if (delta.norm() > 1e-9)
    a.heading = std::atan2(delta.y(), delta.x());
}

void step_agent(AgentRuntime& a, const RoadGraph& graph, const Vec2& ego_position, double clock,
                double dt) {
  if (!a.triggered && a.spec.then) {
    const bool by_time = a.spec.trigger_time >= 0.0 && clock >= a.spec.trigger_time;
    const bool by_gap = a.spec.trigger_ego_gap >= 0.0 &&
                        (ego_position - a.position).norm() <= a.spec.trigger_ego_gap;
    if (by_time || by_gap) {
      a.triggered = true;
      init_phase(a, *a.spec.then, graph);
    }
  }
  const AgentPhase& phase = a.active_phase();
  switch (phase.kind) {
    case ScriptKind::stationary:
      break;
    case ScriptKind::lane_follow: {
      const Lane* lane = graph.find_lane(a.lane_id);
      if (!lane) break;
      // Commanded accel is held across the approach so prediction sees the
      // sustained value, not the final partial step.
      if (a.speed < phase.speed - 1e-9)
        a.accel = phase.accel;
      else if (a.speed > phase.speed + 1e-9)
        a.accel = -phase.accel;
      else
        a.accel = 0.0;
      a.speed = std::clamp(a.speed + a.accel * dt, 0.0,
                           std::max(phase.speed, a.speed));
      if (std::abs(a.speed - phase.speed) < phase.accel * dt) a.speed = phase.speed;
      a.arclength += a.speed * dt;
      int hops = 0;
      while (a.arclength >= lane->centerline.length() && hops < 4) {
        if (lane->successors.empty()) {
          a.arclength = lane->centerline.length();
          a.speed = 0.0;
          a.accel = 0.0;
          break;
        }
        a.arclength -= lane->centerline.length();
        a.lane_id = lane->successors.front();
        lane = graph.find_lane(a.lane_id);
        ++hops;
      }
      place_on_lane(a, *lane);
      break;
    }
    case ScriptKind::velocity:
      a.position += phase.velocity * dt;
      break;
    case ScriptKind::waypoints:
      follow_keyframes(a, phase.keyframes, clock + dt);
      break;
  }
}

const char* bool_cell(bool b) { return b ? "1" : "0"; }

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out += buf;
}

/// Direction from one lane to another within a road along adjacency links:
/// +1 when `to` lies in the left chain, -1 in the right chain, 0 otherwise.
int adjacency_direction(const RoadGraph& graph, const std::string& from, const std::string& to) {
  for (int sign : {+1, -1}) {
    std::string cursor = from;
    for (int hop = 0; hop < 8; ++hop) {
      const Lane* lane = graph.find_lane(cursor);
      if (!lane) break;
      cursor = sign > 0 ? lane->left_lane : lane->right_lane;
      if (cursor.empty()) break;
      if (cursor == to) return sign;
    }
  }
  return 0;
}

void apply_event(BehaviorLabel& label, BehaviorEvent event) {
  const TransitionResult r = fsm_transition(label, event);
  if (r.defined) label = r.next;
}

}  // namespace

NeighborState AgentRuntime::neighbor_state() const {
  NeighborState n;
  n.id = spec.id;
  n.type = spec.type;
  n.shape = shape;
  n.position = position;
  n.heading = heading;
  n.velocity = speed * Vec2(std::cos(heading), std::sin(heading));
  n.lane = lane_id;
  n.accel = accel;
  n.turn_rate = 0.0;
  return n;
}

// Wall-clock timing stays out of the file so identical runs serialize to
// identical bytes; timings are reported in the summary and bench outputs.
std::string log_csv_header() {
  return "t,x,y,heading,speed,steering,throttle,steer,behavior,target_speed,target_steering,"
         "min_neighbor_distance,cost_vel,cost_drift,cost_prog,cost_accel,cost_yaw_rate,"
         "cost_lane_change,cost_wrong_lane,cost_proximity,cost_total,candidates_generated,"
         "candidates_infeasible,candidates_blocked,candidates_scored,tau_used,emergency,"
         "replanned,collision";
}

std::string log_csv_text(const TrajectoryLog& log) {
  std::string out = log_csv_header();
  out += '\n';
  for (const LogRow& r : log.rows) {
    append_number(out, r.t);
    for (double v : {r.position.x(), r.position.y(), r.heading, r.speed, r.steering, r.throttle,
                     r.steer}) {
      out += ',';
      append_number(out, v);
    }
    out += ',';
    out += to_string(r.behavior);
    for (double v : {r.target_speed, r.target_steering, r.min_neighbor_distance, r.cost_vel,
                     r.cost_drift, r.cost_prog, r.cost_accel, r.cost_yaw_rate, r.cost_lane_change,
                     r.cost_wrong_lane, r.cost_proximity, r.cost_total}) {
      out += ',';
      append_number(out, v);
    }
    for (int v : {r.candidates_generated, r.candidates_infeasible, r.candidates_blocked,
                  r.candidates_scored}) {
      out += ',';
      out += std::to_string(v);
    }
    out += ',';
    append_number(out, r.tau_used);
    out += ',';
    out += bool_cell(r.emergency);
    out += ',';
    out += bool_cell(r.replanned);
    out += ',';
    out += bool_cell(r.collision);
    out += '\n';
  }
  return out;
}

void write_log_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write log file: " + path);
  out << log_csv_text(log);
}

std::string summary_json_text(const RunSummary& summary) {
  nlohmann::json j;
  j["scenario"] = summary.scenario;
  j["completed"] = summary.completed;
  j["collisions"] = summary.collisions;
  j["duration"] = summary.duration;
  j["min_clearance_by_type"] = nlohmann::json::object();
  for (const auto& [type, d] : summary.min_clearance_by_type)
    j["min_clearance_by_type"][type] = d;
  j["lane_change_count"] = summary.lane_change_count;
  j["lane_change_positions"] = nlohmann::json::array();
  for (const Vec2& p : summary.lane_change_positions)
    j["lane_change_positions"].push_back({p.x(), p.y()});
  j["stop_events"] = nlohmann::json::array();
  for (const StopEvent& e : summary.stop_events)
    j["stop_events"].push_back({{"begin", e.begin},
                                {"end", e.end},
                                {"position", {e.position.x(), e.position.y()}}});
  j["mean_plan_ms"] = summary.mean_plan_ms;
  j["max_plan_ms"] = summary.max_plan_ms;
  if (std::isfinite(summary.min_cornering_speed))
    j["min_cornering_speed"] = summary.min_cornering_speed;
  else
    j["min_cornering_speed"] = nullptr;
  j["behavior_timeline"] = nlohmann::json::array();
  for (const auto& [t, label] : summary.behavior_timeline)
    j["behavior_timeline"].push_back({{"t", t}, {"behavior", std::string(to_string(label))}});
  return j.dump(2) + "\n";
}

void write_summary_json(const RunSummary& summary, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary file: " + path);
  out << summary_json_text(summary);
}

namespace {

void set_route(EgoRuntime& ego, RoutePlan route) {
  ego.route = std::move(route);
  ego.route_index = 0;
  ego.maneuvers_announced = 0;
  ego.has_route = true;
  ego.road_offsets.assign(ego.route.roads.size(), 0.0);
}

void fill_road_offsets(EgoRuntime& ego, const RoadGraph& graph) {
  double offset = 0.0;
  for (std::size_t i = 0; i < ego.route.roads.size(); ++i) {
    ego.road_offsets[i] = offset;
    offset += graph.road(ego.route.roads[i]).length();
  }
}

/// Moves the ego's route bookkeeping to match its position: nearest lane on
/// the current road, road advance at lane end, and the FSM events both can
/// imply.
void update_route_position(World& w, BehaviorLabel& label, LaneProjection& proj) {
  EgoRuntime& e = w.ego;
  const Vec2 pos = e.tracking.vehicle.position;
  const Road& road = w.graph.road(e.route.roads[e.route_index]);

  const Lane* nearest = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const Lane& lane : road.lanes) {
    const double d = std::abs(signed_lateral_offset(lane, pos));
    if (d < best) {
      best = d;
      nearest = &lane;
    }
  }
  if (nearest && nearest->id != e.lane_id) {
    const Lane* old = w.graph.find_lane(e.lane_id);
    if (old && (old->left_lane == nearest->id || old->right_lane == nearest->id)) {
      w.lane_change_positions.push_back(pos);
      apply_event(label, BehaviorEvent::lane_change_complete);
    }
    e.lane_id = nearest->id;
    e.pending_lane_change.clear();
  }

  const Lane* lane = w.graph.find_lane(e.lane_id);
  proj = closest_lane_point(*lane, pos);
  if (proj.arclength >= lane->centerline.length() - kAdvanceMargin &&
      e.route_index + 1 < e.route.roads.size()) {
    // Crossing into the next route road completes any announced maneuver and
    // resets the stop bookkeeping for the junction just cleared.
    const std::size_t maneuver_index = e.route_index;
    e.route_index += 1;
    const Road& next = w.graph.road(e.route.roads[e.route_index]);
    std::string successor;
    for (const std::string& s : lane->successors) {
      for (const Lane& cand : next.lanes) {
        if (cand.id == s) {
          successor = s;
          break;
        }
      }
      if (!successor.empty()) break;
    }
    if (successor.empty()) {
      const Lane* fallback = nullptr;
      double fallback_best = std::numeric_limits<double>::infinity();
      for (const Lane& cand : next.lanes) {
        const double d = std::abs(signed_lateral_offset(cand, pos));
        if (d < fallback_best) {
          fallback_best = d;
          fallback = &cand;
        }
      }
      successor = fallback->id;
    }
    e.lane_id = successor;
    proj = closest_lane_point(w.graph.lane(e.lane_id), pos);
    if (maneuver_index < e.maneuvers_announced)
      apply_event(label, BehaviorEvent::maneuver_complete);
    if (label == BehaviorLabel::stopped_waiting)
      apply_event(label, BehaviorEvent::cleared_to_go);
    e.completed_stop = false;
    e.pending_lane_change.clear();
  }
}

IntersectionApproach build_approach(World& w, const LaneProjection& proj) {
  EgoRuntime& e = w.ego;
  IntersectionApproach approach;
  const std::string& road_id = e.route.roads[e.route_index];
  const Road& road = w.graph.road(road_id);
  const Junction* junction = w.graph.find_junction(road.to_junction);
  if (!junction || junction->control == IntersectionControl::none) return approach;

  const Lane& lane = w.graph.lane(e.lane_id);
  approach.control = junction->control;
  approach.stop_point = lane.centerline.point_at(lane.centerline.length());
  approach.distance_to_stop = lane.centerline.length() - proj.arclength;

  if (junction->control == IntersectionControl::stoplight) {
    approach.signal = signal_for_road(*junction, road_id, w.clock);
    return approach;
  }

  const Vec2 center = junction->position;
  if (junction->control == IntersectionControl::all_way_stop) {
    auto& queue = w.arrivals[junction->id];
    auto inside = [&](const std::string& id, double radius) {
      if (id == kEgoId) return (e.tracking.vehicle.position - center).norm() <= radius;
      for (const AgentRuntime& a : w.agents)
        if (a.spec.id == id) return (a.position - center).norm() <= radius;
      return false;
    };
    queue.erase(std::remove_if(queue.begin(), queue.end(),
                               [&](const std::string& id) {
                                 return !inside(id, kDepartureRadius);
                               }),
                queue.end());
    auto enqueue = [&](const std::string& id, const Vec2& p) {
      if ((p - center).norm() > kArrivalRadius) return;
      if (std::find(queue.begin(), queue.end(), id) == queue.end()) queue.push_back(id);
    };
    enqueue(kEgoId, e.tracking.vehicle.position);
    for (const AgentRuntime& a : w.agents) enqueue(a.spec.id, a.position);

    if (approach.distance_to_stop < 3.0 && e.tracking.vehicle.speed < 0.1)
      e.completed_stop = true;
    approach.completed_stop = e.completed_stop;
    approach.arrival_queue = queue;
    approach.ego_at_queue_head = !queue.empty() && queue.front() == kEgoId;
    for (const AgentRuntime& a : w.agents) {
      if ((a.position - center).norm() <= kJunctionCore && a.speed > 0.5)
        approach.out_of_turn_entrant = true;
    }
    return approach;
  }

  // Yield: clear unless someone in the zone is closing on the junction.
  approach.cross_traffic_clear = true;
  for (const AgentRuntime& a : w.agents) {
    const Vec2 to_center = center - a.position;
    if (to_center.norm() > kYieldZone || a.speed <= 0.5) continue;
    const Vec2 velocity = a.speed * Vec2(std::cos(a.heading), std::sin(a.heading));
    if (to_center.dot(velocity) > 0.0) approach.cross_traffic_clear = false;
  }
  return approach;
}

/// Lane the ego must reach before the next maneuver or the goal, and the
/// adjacent lane id that steps toward it. Empty when the current lane is
/// already fine or no adjacent lane leads there.
std::string required_merge_target(const World& w, const RoadTransitionManeuver* maneuver,
                                  double progress, int& direction) {
  const EgoRuntime& e = w.ego;
  const double speed = e.tracking.vehicle.speed;
  const double window = std::max(40.0, 2.0 * w.planner.tau * speed);
  direction = 0;

  auto step_toward = [&](const std::string& target) -> std::string {
    const int dir = adjacency_direction(w.graph, e.lane_id, target);
    if (dir == 0) return {};
    const Lane& lane = w.graph.lane(e.lane_id);
    direction = dir;
    return dir > 0 ? lane.left_lane : lane.right_lane;
  };

  if (maneuver && maneuver->from_road == e.route.roads[e.route_index] &&
      progress >= maneuver->route_arclength - window) {
    const auto& sources = maneuver->source_lanes;
    if (!sources.empty() &&
        std::find(sources.begin(), sources.end(), e.lane_id) == sources.end()) {
      for (const std::string& target : sources) {
        std::string next = step_toward(target);
        if (!next.empty()) return next;
      }
    }
  }

  if (e.goal_index < e.goals.size() && e.route_index + 1 == e.route.roads.size()) {
    const LanePosition& goal = e.goals[e.goal_index];
    const double remaining = e.road_offsets.back() + goal.arclength - progress;
    if (goal.lane_id != e.lane_id && remaining > 0.0 && remaining <= window) {
      const Road& road = w.graph.road(e.route.roads[e.route_index]);
      for (const Lane& lane : road.lanes) {
        if (lane.id == goal.lane_id) return step_toward(goal.lane_id);
      }
    }
  }
  return {};
}

void plan_cycle(World& w) {
  EgoRuntime& e = w.ego;
  BehaviorLabel label = e.tracking.vehicle.behavior;
  LaneProjection proj;
  update_route_position(w, label, proj);
  const double progress = e.road_offsets[e.route_index] + proj.arclength;

  const RoadTransitionManeuver* maneuver = next_maneuver(e.route, progress);
  if (maneuver) {
    const std::size_t index =
        static_cast<std::size_t>(maneuver - e.route.maneuvers.data());
    const double speed = e.tracking.vehicle.speed;
    const double window = std::max(25.0, w.planner.tau * speed);
    if (index >= e.maneuvers_announced &&
        progress >= maneuver->route_arclength - window) {
      apply_event(label, maneuver_point_event(maneuver->kind));
      e.maneuvers_announced = index + 1;
    }
  }

  if (e.pending_lane_change.empty()) {
    int direction = 0;
    const std::string target = required_merge_target(w, maneuver, progress, direction);
    if (!target.empty()) {
      e.pending_lane_change = target;
      apply_event(label, direction > 0 ? BehaviorEvent::lane_change_planned_left
                                       : BehaviorEvent::lane_change_planned_right);
    }
  }

  const Lane& lane = w.graph.lane(e.lane_id);
  const double speed_limit = lane.speed_limit;
  const Vec2 pos = e.tracking.vehicle.position;
  WaypointSet waypoints;
  const Lane* pending = e.pending_lane_change.empty()
                            ? nullptr
                            : w.graph.find_lane(e.pending_lane_change);
  const bool pending_adjacent =
      pending && (lane.left_lane == pending->id || lane.right_lane == pending->id);
  if (pending_adjacent && is_merging(label)) {
    waypoints = blend_lane_change_waypoints(lane, *pending, pos, w.planner.tau,
                                            kDefaultWaypointCount, speed_limit);
  } else {
    const LaneCorridor corridor =
        route_corridor(w.graph, e.route, e.route_index, e.lane_id, 4);
    waypoints =
        sample_waypoints(corridor, pos, w.planner.tau, kDefaultWaypointCount, speed_limit);
  }
  const GuidingArc arc =
      compute_guiding_arc(pos, waypoints, e.params, e.profile, speed_limit);
  // The candidate grid centers on the steering that re-acquires the guide
  // from the current pose, not on the arc's own curvature; the two agree
  // when the vehicle is already on the guide and tangent to it.
  const double steer_center =
      pursuit_steering(arc.geometry, pos, e.tracking.vehicle.heading,
                       e.tracking.vehicle.speed, e.params);

  const IntersectionApproach approach = build_approach(w, proj);
  const double v_rule = apply_traffic_rules(arc.target_speed, approach, w.planner.tau);
  const bool stop_needed = approach.control != IntersectionControl::none &&
                           approach.distance_to_stop < kStopZone && v_rule < 0.5;
  if (stop_needed)
    apply_event(label, BehaviorEvent::stop_required);
  else if (label == BehaviorLabel::stopped_waiting)
    apply_event(label, BehaviorEvent::cleared_to_go);

  const BehaviorOverrides& overrides = behavior_overrides(label);
  LaneContext lanes;
  lanes.current = &lane;
  lanes.left = lane.left_lane.empty() ? nullptr : w.graph.find_lane(lane.left_lane);
  lanes.right = lane.right_lane.empty() ? nullptr : w.graph.find_lane(lane.right_lane);

  std::vector<NeighborState> neighbors;
  neighbors.reserve(w.agents.size());
  for (const AgentRuntime& a : w.agents) {
    if ((a.position - pos).norm() <= kSensingRange) neighbors.push_back(a.neighbor_state());
  }

  const PlanResult result =
      plan(e.tracking, e.params, e.profile, arc.geometry, v_rule, steer_center, e.prior,
           neighbors, &w.graph, lanes, maneuver, overrides, w.planner, w.weights);

  e.target_speed = result.chosen.target_speed;
  e.target_steering = result.chosen.target_steering;
  e.prior = std::make_pair(e.target_speed, e.target_steering);
  e.last_plan = result;
  e.last_plan_time = w.clock;
  if (result.chosen.cost) {
    const CostWeights scaled = weights_for_behavior(w.weights, overrides);
    e.last_cost_total = result.chosen.cost->total(scaled);
  } else {
    e.last_cost_total = std::numeric_limits<double>::quiet_NaN();
  }

  if (result.selection && result.selection->lane_change_planned &&
      e.pending_lane_change.empty()) {
    const int dir = result.selection->lane_change_direction;
    const std::string& target = dir > 0 ? lane.left_lane : lane.right_lane;
    if (!target.empty()) {
      e.pending_lane_change = target;
      apply_event(label, dir > 0 ? BehaviorEvent::lane_change_planned_left
                                 : BehaviorEvent::lane_change_planned_right);
    }
  }

  e.tracking.vehicle.behavior = label;
  w.plan_ms_sum += result.diagnostics.wall_time_ms;
  w.plan_ms_max = std::max(w.plan_ms_max, result.diagnostics.wall_time_ms);
  w.plan_count += 1;
}

void check_goal(World& w) {
  EgoRuntime& e = w.ego;
  if (!e.has_route || e.goal_index >= e.goals.size()) return;
  const LanePosition& goal = e.goals[e.goal_index];
  const Vec2 goal_point = w.graph.lane(goal.lane_id).centerline.point_at(goal.arclength);
  if ((e.tracking.vehicle.position - goal_point).norm() > kGoalRadius) return;
  e.goal_index += 1;
  if (e.goal_index >= e.goals.size()) {
    w.completed = true;
    return;
  }
  const Lane& lane = w.graph.lane(e.lane_id);
  const LaneProjection proj = closest_lane_point(lane, e.tracking.vehicle.position);
  auto route = plan_route(w.graph, LanePosition{e.lane_id, proj.arclength},
                          e.goals[e.goal_index]);
  if (!route) {
    w.route_failed = true;
    return;
  }
  set_route(e, std::move(*route));
  fill_road_offsets(e, w.graph);
  e.pending_lane_change.clear();
  e.completed_stop = false;
}

}  // namespace

World make_world(const Scenario& scenario, const VehicleParams& params,
                 const DynamicsProfile& profile) {
  World w;
  w.graph = scenario.map;
  w.planner = scenario.planner;
  w.weights = scenario.weights;
  w.seed = scenario.seed;
  w.log.tick_dt = scenario.planner.physics_dt;

  EgoRuntime& e = w.ego;
  e.params = params;
  e.profile = profile;
  e.goals = scenario.ego.goals;
  const Lane& start_lane = w.graph.lane(scenario.ego.start.lane_id);
  e.lane_id = start_lane.id;
  e.tracking.vehicle.position = start_lane.centerline.point_at(scenario.ego.start.arclength);
  e.tracking.vehicle.heading = start_lane.centerline.heading_at(scenario.ego.start.arclength);
  e.tracking.vehicle.speed = scenario.ego.start_speed;

  if (!e.goals.empty()) {
    auto route = plan_route(w.graph, scenario.ego.start, e.goals.front());
    if (!route)
      throw ScenarioError("no route from lane '" + scenario.ego.start.lane_id + "' to lane '" +
                          e.goals.front().lane_id + "'");
    set_route(e, std::move(*route));
    fill_road_offsets(e, w.graph);
  }

  w.agents.reserve(scenario.agents.size());
  for (const AgentSpec& spec : scenario.agents) {
    AgentRuntime a;
    a.spec = spec;
    a.shape = ConvexPolygon::rectangle(spec.length, spec.width);
    a.position = spec.position;
    a.heading = spec.heading;
    a.speed = spec.speed;
    init_phase(a, a.spec.script, w.graph);
    w.agents.push_back(std::move(a));
  }
  return w;
}

void step_world(World& w, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("step_world needs dt > 0");
  const double ratio = w.planner.replan_period / dt;
  const auto ticks_per_plan = static_cast<std::uint64_t>(std::llround(ratio));
  if (ticks_per_plan == 0 || std::abs(ratio - static_cast<double>(ticks_per_plan)) > 1e-6)
    throw std::invalid_argument("dt must divide the replan period");
  if (w.collided || w.completed || w.route_failed) return;

  const bool replan = w.ego.has_route && (w.tick % ticks_per_plan == 0);
  if (replan) plan_cycle(w);

  EgoRuntime& e = w.ego;
  const ConvexPolygon ego_fp = transformed(e.params.footprint, e.tracking.vehicle.position,
                                           e.tracking.vehicle.heading);
  double min_distance = std::numeric_limits<double>::infinity();
  for (const AgentRuntime& a : w.agents) {
    const ConvexPolygon agent_fp = transformed(a.shape, a.position, a.heading);
    const double d = polygon_distance(ego_fp, agent_fp);
    min_distance = std::min(min_distance, d);
    const std::string type = to_string(a.spec.type);
    auto [it, inserted] = w.min_clearance_by_type.try_emplace(type, d);
    if (!inserted) it->second = std::min(it->second, d);
    if (intersects(ego_fp, agent_fp)) w.collided = true;
  }

  LogRow row;
  row.t = w.clock;
  row.position = e.tracking.vehicle.position;
  row.heading = e.tracking.vehicle.heading;
  row.speed = e.tracking.vehicle.speed;
  row.steering = e.tracking.vehicle.steering;
  row.throttle = e.tracking.vehicle.controls.throttle;
  row.steer = e.tracking.vehicle.controls.steer;
  row.behavior = e.tracking.vehicle.behavior;
  row.target_speed = e.target_speed;
  row.target_steering = e.target_steering;
  row.min_neighbor_distance = min_distance;
  const std::optional<CostBreakdown>& chosen_cost = e.last_plan.chosen.cost;
  if (chosen_cost) {
    row.cost_vel = chosen_cost->vel;
    row.cost_drift = chosen_cost->drift;
    row.cost_prog = chosen_cost->prog;
    row.cost_accel = chosen_cost->accel;
    row.cost_yaw_rate = chosen_cost->yaw_rate;
    row.cost_lane_change = chosen_cost->lane_change;
    row.cost_wrong_lane = chosen_cost->wrong_lane;
    row.cost_proximity = chosen_cost->proximity;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.cost_vel = row.cost_drift = row.cost_prog = row.cost_accel = nan;
    row.cost_yaw_rate = row.cost_lane_change = row.cost_wrong_lane = row.cost_proximity = nan;
  }
  row.cost_total = chosen_cost ? e.last_cost_total : std::numeric_limits<double>::quiet_NaN();
  row.candidates_generated = e.last_plan.diagnostics.generated;
  row.candidates_infeasible = e.last_plan.diagnostics.infeasible;
  row.candidates_blocked = e.last_plan.diagnostics.blocked;
  row.candidates_scored = e.last_plan.diagnostics.scored;
  row.tau_used = e.last_plan.diagnostics.tau_used;
  row.emergency = e.last_plan.diagnostics.emergency;
  row.replanned = replan;
  row.plan_ms = e.last_plan.diagnostics.wall_time_ms;
  row.collision = w.collided;
  w.log.rows.push_back(row);
  if (w.collided) return;

  tick_tracking(e.tracking, e.target_speed, e.target_steering, e.params, e.profile, dt);
  const Vec2 ego_position = e.tracking.vehicle.position;
  for (AgentRuntime& a : w.agents) step_agent(a, w.graph, ego_position, w.clock, dt);
  w.clock += dt;
  w.tick += 1;
  check_goal(w);
}

RunResult run_scenario(const Scenario& scenario, const VehicleParams& params,
                       const DynamicsProfile& profile) {
  World w = make_world(scenario, params, profile);
  const double dt = w.planner.physics_dt;
  while (!w.collided && !w.completed && !w.route_failed && w.clock < scenario.timeout) {
    step_world(w, dt);
  }

  RunSummary s;
  s.scenario = scenario.name;
  s.completed = w.completed;
  s.collisions = w.collided ? 1 : 0;
  s.duration = w.clock;
  s.min_clearance_by_type = w.min_clearance_by_type;
  s.lane_change_positions = w.lane_change_positions;
  s.lane_change_count = static_cast<int>(w.lane_change_positions.size());
  s.mean_plan_ms = w.plan_count ? w.plan_ms_sum / static_cast<double>(w.plan_count) : 0.0;
  s.max_plan_ms = w.plan_ms_max;

  bool stopped = false;
  StopEvent open;
  for (const LogRow& row : w.log.rows) {
    if (!stopped && row.speed < 0.15) {
      stopped = true;
      open.begin = row.t;
      open.position = row.position;
    } else if (stopped && row.speed > 0.5) {
      stopped = false;
      open.end = row.t;
      s.stop_events.push_back(open);
    }
    if (std::abs(row.steering) > kCorneringSteering)
      s.min_cornering_speed = std::min(s.min_cornering_speed, row.speed);
    if (s.behavior_timeline.empty() || s.behavior_timeline.back().second != row.behavior)
      s.behavior_timeline.emplace_back(row.t, row.behavior);
  }
  if (stopped && !w.log.rows.empty()) {
    open.end = w.log.rows.back().t;
    s.stop_events.push_back(open);
  }
  return RunResult{std::move(w.log), std::move(s)};
}

}  // namespace navsim
