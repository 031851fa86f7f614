#include "navsim/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace navsim {

LaneCorridor::LaneCorridor(std::vector<const Lane*> lanes) : lanes_(std::move(lanes)) {
  if (lanes_.empty()) throw std::invalid_argument("corridor needs at least one lane");
  offsets_.reserve(lanes_.size());
  for (const Lane* lane : lanes_) {
    if (!lane) throw std::invalid_argument("corridor lane is null");
    offsets_.push_back(total_length_);
    total_length_ += lane->centerline.length();
  }
}

Vec2 LaneCorridor::point_at(double s) const {
  const Location loc = locate(s);
  return loc.lane->centerline.point_at(loc.arclength);
}

double LaneCorridor::heading_at(double s) const {
  const Location loc = locate(s);
  return loc.lane->centerline.heading_at(loc.arclength);
}

Polyline::Projection LaneCorridor::closest(const Vec2& p) const {
  Polyline::Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    Polyline::Projection proj = lanes_[i]->centerline.closest(p);
    proj.arclength += offsets_[i];
    if (proj.distance < best.distance - 1e-12 ||
        (proj.distance < best.distance + 1e-12 && proj.arclength > best.arclength)) {
      best = proj;
    }
  }
  return best;
}

LaneCorridor::Location LaneCorridor::locate(double s) const {
  if (lanes_.empty()) return {};
  const double sc = std::clamp(s, 0.0, total_length_);
  std::size_t idx = lanes_.size() - 1;
  for (std::size_t i = 0; i + 1 < lanes_.size(); ++i) {
    if (sc < offsets_[i + 1]) {
      idx = i;
      break;
    }
  }
  return {lanes_[idx], sc - offsets_[idx]};
}

double LaneCorridor::speed_limit_at(double s) const {
  const Location loc = locate(s);
  return loc.lane ? loc.lane->speed_limit : 0.0;
}

LaneCorridor route_corridor(const RoadGraph& graph, const RoutePlan& route,
                            std::size_t route_index, const std::string& current_lane_id,
                            std::size_t lanes_ahead) {
  std::vector<const Lane*> chain;
  const Lane* lane = &graph.lane(current_lane_id);
  if (route_index < route.roads.size() &&
      graph.road_of_lane(current_lane_id).id != route.roads[route_index]) {
    throw std::invalid_argument("current lane is not on the route road at route_index");
  }
  chain.push_back(lane);
  for (std::size_t j = route_index + 1;
       j < route.roads.size() && chain.size() < 1 + lanes_ahead; ++j) {
    const std::string& next_road_id = route.roads[j];
    const Lane* next = nullptr;
    for (const std::string& succ : lane->successors) {
      if (graph.road_of_lane(succ).id == next_road_id) {
        next = &graph.lane(succ);
        break;
      }
    }
    if (!next) {
      // No declared link; keep the lane index where the next road allows it.
      const Road& current_road = graph.road_of_lane(lane->id);
      std::size_t lane_idx = 0;
      for (std::size_t l = 0; l < current_road.lanes.size(); ++l) {
        if (current_road.lanes[l].id == lane->id) lane_idx = l;
      }
      const Road& next_road = graph.road(next_road_id);
      next = &next_road.lanes[std::min(lane_idx, next_road.lanes.size() - 1)];
    }
    chain.push_back(next);
    lane = next;
  }
  return LaneCorridor(std::move(chain));
}

WaypointSet sample_waypoints(const LaneCorridor& corridor, const Vec2& position, double tau,
                             int k, double intended_speed) {
  if (k < 3 || k % 2 == 0) {
    throw std::invalid_argument("waypoint count must be odd and at least 3");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (corridor.empty()) throw std::invalid_argument("corridor is empty");

  WaypointSet wp;
  wp.horizon = tau;
  wp.intended_speed = std::max(intended_speed, kMinWaypointSpeed);
  const double reach = tau * wp.intended_speed;
  const double s0 = corridor.closest(position).arclength;
  wp.points.reserve(k);
  for (int i = 1; i <= k; ++i) {
    const double s = s0 + reach * static_cast<double>(i) / k;
    if (s > corridor.length() + 1e-9) wp.truncated = true;
    wp.points.push_back(corridor.point_at(s));
  }
  return wp;
}

WaypointSet blend_lane_change_waypoints(const LaneCorridor& from, const LaneCorridor& to,
                                        const Vec2& position, double tau, int k,
                                        double intended_speed) {
  const WaypointSet departure = sample_waypoints(from, position, tau, k, intended_speed);
  const WaypointSet destination = sample_waypoints(to, position, tau, k, intended_speed);

  WaypointSet wp;
  wp.horizon = tau;
  wp.intended_speed = departure.intended_speed;
  wp.truncated = departure.truncated || destination.truncated;
  wp.points.reserve(k);
  for (int i = 1; i <= k; ++i) {
    const double alpha = static_cast<double>(i) / k;
    wp.points.push_back((1.0 - alpha) * departure.points[i - 1] +
                        alpha * destination.points[i - 1]);
  }
  return wp;
}

WaypointSet blend_lane_change_waypoints(const Lane& from, const Lane& to, const Vec2& position,
                                        double tau, int k, double intended_speed) {
  if (from.left_lane != to.id && from.right_lane != to.id) {
    throw std::invalid_argument("lane change requires adjacent lanes");
  }
  const LaneCorridor departure({&from});
  const LaneCorridor destination({&to});
  return blend_lane_change_waypoints(departure, destination, position, tau, k, intended_speed);
}

GuidingArc compute_guiding_arc(const Vec2& position, const WaypointSet& waypoints,
                               const VehicleParams& params, const DynamicsProfile& profile,
                               double speed_limit) {
  if (waypoints.count() < 3 || waypoints.count() % 2 == 0) {
    throw std::invalid_argument("guiding arc needs an odd waypoint count of at least 3");
  }
  const Vec2 median = waypoints.median();
  const Vec2 last = waypoints.last();

  GuidingArc out;
  const auto as_line = [&] {
    out.geometry.kind = ArcOrLine::Kind::line;
    out.geometry.start = position;
    out.geometry.end = last;
    out.target_steering = 0.0;
    out.target_speed = std::min(speed_limit, profile.v_max);
  };

  // Coincident defining points cannot span a circle; fall back to the chord.
  if ((position - median).norm() < 1e-9 || (median - last).norm() < 1e-9 ||
      (position - last).norm() < 1e-9) {
    as_line();
    return out;
  }

  ArcOrLine geometry = circle_through(position, median, last);
  if (geometry.is_arc() && geometry.central_angle() > M_PI + 1e-12) {
    // Reversal arc: reflect the median across the position-to-last axis,
    // rebuild the circle, and take its complementary sweep. The result keeps
    // the endpoints and the radius, sweeps at most a half circle, and bulges
    // toward the side of the chord the original median was on.
    const Vec2 axis = (last - position).normalized();
    const Vec2 rel = median - position;
    const Vec2 mirrored = position + 2.0 * rel.dot(axis) * axis - rel;
    geometry = circle_through(position, mirrored, last);
    if (geometry.is_arc()) {
      geometry.direction = geometry.direction == TurnDirection::left ? TurnDirection::right
                                                                     : TurnDirection::left;
    }
    out.reflected = true;
  }

  out.geometry = geometry;
  if (!geometry.is_arc()) {
    as_line();
    return out;
  }
  out.target_steering = arc_steering(geometry, params);
  out.target_speed = std::min(speed_limit, max_safe_speed(profile, geometry.radius));
  return out;
}

double pursuit_steering(const ArcOrLine& guide, const Vec2& position, double heading,
                        double speed, const VehicleParams& params) {
  const double lookahead = std::max(kMinPursuitLookahead, kPursuitLookaheadTime * speed);
  const Vec2 aim = guide.point_along(lookahead);
  const Vec2 offset = aim - position;
  const double chord = offset.norm();
  if (chord < 1e-9) return 0.0;
  const double bearing = std::remainder(std::atan2(offset.y(), offset.x()) - heading, 2.0 * M_PI);
  const double phi = std::atan(2.0 * params.wheelbase() * std::sin(bearing) / chord);
  return std::clamp(phi, -params.max_steering, params.max_steering);
}

double stop_speed(double distance, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double d = std::max(distance, 0.0);
  if (d <= kStopCutoffDistance) return 0.0;
  return d / tau;
}

double apply_traffic_rules(double v_prime, const IntersectionApproach& approach, double tau) {
  switch (approach.control) {
    case IntersectionControl::none:
      return v_prime;
    case IntersectionControl::stoplight:
      if (approach.signal == SignalColor::green) return v_prime;
      return std::min(v_prime, stop_speed(approach.distance_to_stop, tau));
    case IntersectionControl::all_way_stop:
      if (approach.completed_stop) {
        const bool my_turn = approach.ego_at_queue_head && !approach.out_of_turn_entrant;
        return my_turn ? v_prime : 0.0;
      }
      return std::min(v_prime, stop_speed(approach.distance_to_stop, tau));
    case IntersectionControl::yield:
      if (approach.cross_traffic_clear) return v_prime;
      return std::min(v_prime, stop_speed(approach.distance_to_stop, tau));
  }
  return v_prime;
}

}  // namespace navsim
