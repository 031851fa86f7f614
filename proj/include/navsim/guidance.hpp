#pragma once

#include <limits>
#include <string>
#include <vector>

#include "navsim/dynamics.hpp"
#include "navsim/geometry.hpp"
#include "navsim/road_network.hpp"
#include "navsim/vehicle.hpp"

namespace navsim {

inline constexpr int kDefaultWaypointCount = 7;
inline constexpr double kDefaultHorizon = 4.0;  // s
// Waypoints keep a minimum spacing so a guiding path exists at rest.
inline constexpr double kMinWaypointSpeed = 2.0;  // m/s
// Inside this distance the stop-point recurrence commands a full stop.
inline constexpr double kStopCutoffDistance = 0.5;  // m

/// Non-owning chain of consecutive lanes with a continuous arclength
/// parameterization. Lanes must outlive the corridor (they normally live in
/// a RoadGraph).
class LaneCorridor {
 public:
  LaneCorridor() = default;
  explicit LaneCorridor(std::vector<const Lane*> lanes);

  bool empty() const { return lanes_.empty(); }
  double length() const { return total_length_; }
  const std::vector<const Lane*>& lanes() const { return lanes_; }

  Vec2 point_at(double s) const;
  double heading_at(double s) const;

  /// Closest point across the whole chain, with corridor arclength.
  Polyline::Projection closest(const Vec2& p) const;

  struct Location {
    const Lane* lane = nullptr;
    double arclength = 0.0;  // within that lane
  };
  Location locate(double s) const;

  double speed_limit_at(double s) const;

 private:
  std::vector<const Lane*> lanes_;
  std::vector<double> offsets_;  // corridor arclength where each lane starts
  double total_length_ = 0.0;
};

/// Lane chain ahead of the ego along a planned route: the current lane, then
/// its successor on each following route road.
LaneCorridor route_corridor(const RoadGraph& graph, const RoutePlan& route,
                            std::size_t route_index, const std::string& current_lane_id,
                            std::size_t lanes_ahead = 4);

/// Waypoints w_1..w_k ahead of the ego at fixed time intervals.
struct WaypointSet {
  std::vector<Vec2> points;
  double horizon = kDefaultHorizon;
  double intended_speed = 0.0;
  bool truncated = false;  // ran out of corridor before the horizon

  int count() const { return static_cast<int>(points.size()); }
  const Vec2& median() const { return points[(points.size() - 1) / 2]; }
  const Vec2& last() const { return points.back(); }
};

/// Samples k waypoints at arclengths (i/k) * tau * speed ahead of the ego's
/// projection, clamping at the corridor end (and flagging truncation).
/// k must be odd and at least 3.
WaypointSet sample_waypoints(const LaneCorridor& corridor, const Vec2& position, double tau,
                             int k, double intended_speed);

/// Lane-change waypoints: a linear blend from departure to destination
/// samples, alpha_i = i/k.
WaypointSet blend_lane_change_waypoints(const LaneCorridor& from, const LaneCorridor& to,
                                        const Vec2& position, double tau, int k,
                                        double intended_speed);

/// Adjacency-checked single-lane variant.
WaypointSet blend_lane_change_waypoints(const Lane& from, const Lane& to, const Vec2& position,
                                        double tau, int k, double intended_speed);

/// Local circular-arc reference with its speed and steering targets.
struct GuidingArc {
  ArcOrLine geometry;
  double target_speed = 0.0;     // v'
  double target_steering = 0.0;  // phi'
  bool reflected = false;
};

/// Circle through (ego, median waypoint, last waypoint). When the swept
/// angle would exceed a half circle the median is reflected about the
/// ego-to-last axis and the circle recomputed. Speed target honors the
/// speed limit and the slip limit of the arc radius.
GuidingArc compute_guiding_arc(const Vec2& position, const WaypointSet& waypoints,
                               const VehicleParams& params, const DynamicsProfile& profile,
                               double speed_limit);

// Lookahead for the steering that re-acquires the guiding path: one second
// of travel, floored so the aim point stays ahead of the bumper at rest.
inline constexpr double kPursuitLookaheadTime = 1.0;  // s
inline constexpr double kMinPursuitLookahead = 5.0;   // m

/// Steering angle that drives the vehicle toward a point on the guide one
/// lookahead ahead of its start (pure pursuit). With the vehicle on the
/// guide and tangent to it this equals the arc's own steering angle; off
/// the guide or off heading it carries the correction back onto it.
double pursuit_steering(const ArcOrLine& guide, const Vec2& position, double heading,
                        double speed, const VehicleParams& params);

/// Everything the traffic-rule shaping needs to know about the next
/// controlled intersection on the ego's path.
struct IntersectionApproach {
  IntersectionControl control = IntersectionControl::none;
  Vec2 stop_point = Vec2::Zero();
  double distance_to_stop = std::numeric_limits<double>::infinity();
  SignalColor signal = SignalColor::green;          // stoplight
  std::vector<std::string> arrival_queue;           // all-way stop, head first
  bool ego_at_queue_head = false;                   // all-way stop
  bool out_of_turn_entrant = false;                 // all-way stop
  bool completed_stop = false;                      // all-way stop
  bool cross_traffic_clear = false;                 // yield
};

/// Speed that reaches the stop point in tau seconds, 0 inside the cutoff.
double stop_speed(double distance, double tau);

/// Shapes the guiding-arc target speed with the intersection rules.
double apply_traffic_rules(double v_prime, const IntersectionApproach& approach, double tau);

}  // namespace navsim
