#include "navsim/collision.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace navsim {
namespace {

constexpr double kSpeedDedupTol = 1e-9;
constexpr double kSteeringDedupTol = 1e-12;
constexpr double kLaneKeepSpeedTol = 0.05;  // m/s, bisection resolution
constexpr int kLaneKeepMaxIterations = 24;

/// Distance travelled after time t from speed v0 under constant acceleration,
/// with the speed floored at zero: a braking agent stops and stays.
double distance_with_stop(double v0, double a, double t) {
  if (a < 0.0) {
    const double t_stop = v0 / -a;
    if (t >= t_stop) {
      return 0.5 * v0 * t_stop;
    }
  }
  return v0 * t + 0.5 * a * t * t;
}

/// Motion model resolved once per neighbor; pose queries are then cheap.
struct NeighborMotion {
  bool lane_bound = false;
  const Lane* lane = nullptr;
  double start_arclength = 0.0;
  double lateral_offset = 0.0;
  double speed0 = 0.0;
  double accel = 0.0;
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double turn_rate = 0.0;
};

NeighborMotion resolve_motion(const NeighborState& n, const RoadGraph* graph) {
  NeighborMotion m;
  m.speed0 = n.speed();
  m.accel = n.accel;
  m.position = n.position;
  m.heading = n.heading;
  m.turn_rate = n.turn_rate;
  if (graph != nullptr && !n.lane.empty()) {
    if (const Lane* lane = graph->find_lane(n.lane)) {
      const double offset = signed_lateral_offset(*lane, n.position);
      if (std::abs(offset) < 0.5 * lane->width) {
        m.lane_bound = true;
        m.lane = lane;
        m.start_arclength = closest_lane_point(*lane, n.position).arclength;
        m.lateral_offset = offset;
      }
    }
  }
  return m;
}

PredictedPose pose_at(const NeighborMotion& m, double t) {
  PredictedPose pose;
  if (m.lane_bound) {
    const double s = std::min(m.start_arclength + distance_with_stop(m.speed0, m.accel, t),
                              m.lane->centerline.length());
    const double heading = m.lane->centerline.heading_at(s);
    const Vec2 left(-std::sin(heading), std::cos(heading));
    pose.position = m.lane->centerline.point_at(s) + m.lateral_offset * left;
    pose.heading = heading;
    return pose;
  }
  double te = t;
  if (m.accel < 0.0) {
    te = std::min(te, m.speed0 / -m.accel);
  }
  if (std::abs(m.turn_rate) < 1e-9) {
    const double d = m.speed0 * te + 0.5 * m.accel * te * te;
    pose.position = m.position + d * Vec2(std::cos(m.heading), std::sin(m.heading));
    pose.heading = m.heading;
    return pose;
  }
  const double w = m.turn_rate;
  const double v_te = m.speed0 + m.accel * te;
  const double psi = m.heading + w * te;
  const double s0 = std::sin(m.heading);
  const double c0 = std::cos(m.heading);
  const double s1 = std::sin(psi);
  const double c1 = std::cos(psi);
  pose.position.x() = m.position.x() + (v_te * s1 - m.speed0 * s0 + m.accel / w * (c1 - c0)) / w;
  pose.position.y() = m.position.y() + (-v_te * c1 + m.speed0 * c0 + m.accel / w * (s1 - s0)) / w;
  pose.heading = psi;
  return pose;
}

struct NeighborSnapshot {
  const NeighborState* state = nullptr;
  NeighborMotion motion;
  double radius = 0.0;
};

std::vector<NeighborSnapshot> snapshot_neighbors(const std::vector<NeighborState>& neighbors,
                                                 const RoadGraph* graph) {
  std::vector<NeighborSnapshot> snaps;
  snaps.reserve(neighbors.size());
  for (const NeighborState& n : neighbors) {
    snaps.push_back({&n, resolve_motion(n, graph), n.shape.radius_about_origin()});
  }
  return snaps;
}

/// Half of the largest pose change on the intervals adjacent to sample i:
/// position chord plus hull radius times rotation. Any interpolated pose
/// between two samples stays within the half-interval figure of the nearer
/// sampled pose, so inflating the sampled test by this much covers the
/// whole interval.
template <typename PositionAt, typename HeadingAt>
double half_interval_margin(std::size_t i, std::size_t count, double hull_radius,
                            const PositionAt& position, const HeadingAt& heading) {
  const auto span = [&](std::size_t a, std::size_t b) {
    return (position(b) - position(a)).norm() +
           hull_radius * std::abs(heading(b) - heading(a));
  };
  double widest = 0.0;
  if (i > 0) widest = std::max(widest, span(i - 1, i));
  if (i + 1 < count) widest = std::max(widest, span(i, i + 1));
  return 0.5 * widest;
}

/// Containment test of the ego trajectory against every predicted neighbor:
/// the relative center position inside O_n (+) -O_e at a sample means
/// collision. Each sample test is inflated by the half-interval margins of
/// both bodies, which makes the discrete check conservative for the motion
/// between samples: a single sample carries no margin and the test is exact.
/// Pairs whose center distance exceeds the summed footprint radii plus the
/// margin are skipped without building the obstacle.
bool trajectory_collision_free(const std::vector<TrajectorySample>& trajectory,
                               const ConvexPolygon& negated_ego, double ego_radius,
                               const std::vector<NeighborSnapshot>& neighbors) {
  const std::size_t count = trajectory.size();
  if (count == 0 || neighbors.empty()) {
    return true;
  }

  std::vector<double> ego_margin(count);
  for (std::size_t i = 0; i < count; ++i) {
    ego_margin[i] = half_interval_margin(
        i, count, ego_radius, [&](std::size_t k) { return trajectory[k].position; },
        [&](std::size_t k) { return trajectory[k].heading; });
  }

  std::vector<std::vector<PredictedPose>> poses(neighbors.size());
  std::vector<std::vector<double>> neighbor_margin(neighbors.size());
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    poses[j].resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      poses[j][i] = pose_at(neighbors[j].motion, trajectory[i].t);
    }
    neighbor_margin[j].resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      neighbor_margin[j][i] = half_interval_margin(
          i, count, neighbors[j].radius, [&](std::size_t k) { return poses[j][k].position; },
          [&](std::size_t k) { return poses[j][k].heading; });
    }
  }

  for (std::size_t i = 0; i < count; ++i) {
    std::optional<ConvexPolygon> ego_rotated;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
      const NeighborSnapshot& n = neighbors[j];
      const double margin = ego_margin[i] + neighbor_margin[j][i];
      const Vec2 rel = trajectory[i].position - poses[j][i].position;
      if (rel.norm() > n.radius + ego_radius + margin + 1e-9) {
        continue;
      }
      if (!ego_rotated) {
        ego_rotated = transformed(negated_ego, Vec2::Zero(), trajectory[i].heading);
      }
      const ConvexPolygon obstacle =
          minkowski_sum(transformed(n.state->shape, Vec2::Zero(), poses[j][i].heading),
                        *ego_rotated);
      if (obstacle.contains(rel) || distance_to_point(obstacle, rel) <= margin) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

PredictedPose predict_neighbor(const NeighborState& n, const RoadGraph* graph, double t) {
  if (t < 0.0) {
    throw std::invalid_argument("predict_neighbor requires t >= 0");
  }
  return pose_at(resolve_motion(n, graph), t);
}

ConvexPolygon predicted_footprint(const NeighborState& n, const PredictedPose& pose) {
  return transformed(n.shape, pose.position, pose.heading);
}

std::string to_string(CandidateSource source) {
  switch (source) {
    case CandidateSource::grid: return "grid";
    case CandidateSource::prior: return "prior";
    case CandidateSource::lane_keep: return "lane_keep";
    case CandidateSource::emergency: return "emergency";
  }
  return "unknown";
}

void PlannerConfig::validate() const {
  if (!(replan_period > 0.0) || !(tau > replan_period)) {
    throw std::invalid_argument("planner horizon must exceed the positive control period");
  }
  if (!(physics_dt > 0.0)) {
    throw std::invalid_argument("planner physics_dt must be positive");
  }
  if (trajectory_samples < 2) {
    throw std::invalid_argument("planner needs at least 2 trajectory samples");
  }
  if (!(grid_speed_span > 0.0) || !(grid_steering_span > 0.0)) {
    throw std::invalid_argument("planner grid spans must be positive");
  }
  if (grid_size < 1 || grid_size % 2 == 0 || prior_grid_size < 1 || prior_grid_size % 2 == 0) {
    throw std::invalid_argument("planner grids must have odd positive dimensions");
  }
  if (tau_fallback.empty()) {
    throw std::invalid_argument("planner fallback schedule must not be empty");
  }
  for (std::size_t i = 0; i < tau_fallback.size(); ++i) {
    if (!(tau_fallback[i] > replan_period)) {
      throw std::invalid_argument("every fallback horizon must exceed the control period");
    }
    if (i > 0 && !(tau_fallback[i] < tau_fallback[i - 1])) {
      throw std::invalid_argument("fallback horizons must strictly decrease");
    }
  }
}

std::vector<CandidateControl> generate_candidates(
    double v_prime, double phi_prime, const std::optional<std::pair<double, double>>& prior,
    const PlannerConfig& cfg, const BehaviorOverrides& overrides) {
  cfg.validate();
  std::vector<CandidateControl> out;
  out.reserve(static_cast<std::size_t>(cfg.grid_size) * cfg.grid_size + 10);

  // v_prime already carries the speed limit and every traffic-rule cap, so
  // no candidate may target more than the guide speed; the grid explores
  // sideways and downward only. Rows that would land above it collapse onto
  // the cap and dedup.
  const double v_cap = std::max(v_prime, 0.0);
  const auto push_unique = [&out, v_cap](double v, double phi, CandidateSource source) {
    v = std::min(v, v_cap);
    if (v < 0.0) {
      return;
    }
    for (const CandidateControl& existing : out) {
      if (std::abs(existing.target_speed - v) < kSpeedDedupTol &&
          std::abs(existing.target_steering - phi) < kSteeringDedupTol) {
        return;
      }
    }
    CandidateControl c;
    c.target_speed = v;
    c.target_steering = phi;
    c.source = source;
    out.push_back(std::move(c));
  };

  const double steering_span = cfg.grid_steering_span * overrides.steering_span_scale;
  const auto add_grid = [&](double center_v, double center_phi, int size, double v_span,
                            double phi_span, CandidateSource source) {
    const int half = size / 2;
    const double v_step = half > 0 ? v_span / half : 0.0;
    const double phi_step = half > 0 ? phi_span / half : 0.0;
    for (int i = -half; i <= half; ++i) {
      for (int j = -half; j <= half; ++j) {
        const double phi = center_phi + j * phi_step;
        if (overrides.restrict_steering_to_arc_side && phi * phi_prime < 0.0) {
          continue;
        }
        push_unique(center_v + i * v_step, phi, source);
      }
    }
  };

  add_grid(v_prime, phi_prime, cfg.grid_size, cfg.grid_speed_span, steering_span,
           CandidateSource::grid);
  if (prior.has_value()) {
    add_grid(prior->first, prior->second, cfg.prior_grid_size, cfg.grid_speed_span / 2.0,
             steering_span / 2.0, CandidateSource::prior);
  }
  return out;
}

bool candidate_admissible(double target_speed, double target_steering,
                          const VehicleParams& params, const DynamicsProfile& profile) {
  if (target_speed < 0.0 || target_speed > params.max_speed + 1e-9) {
    return false;
  }
  return std::abs(target_steering) <= max_safe_steering(profile, params, target_speed) + 1e-9;
}

void tick_tracking(TrackingState& tracking, double target_speed, double target_steering,
                   const VehicleParams& params, const DynamicsProfile& profile, double dt) {
  ControlInput u;
  u.throttle = tracking.speed_pid.update(target_speed, tracking.vehicle.speed, dt);
  u.steer = tracking.steering_pid.update(target_steering, tracking.vehicle.steering, dt);
  tracking.vehicle = step(tracking.vehicle, params, profile, u, dt);
}

std::vector<TrajectorySample> rollout_candidate(const TrackingState& start, double target_speed,
                                                double target_steering,
                                                const VehicleParams& params,
                                                const DynamicsProfile& profile,
                                                const PlannerConfig& cfg, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("rollout_candidate requires tau > 0");
  }
  // Integration always runs on the fixed physics grid; sample times are
  // interpolated from the tick states. The integrated path is therefore the
  // same at any sample count, and identical to what the simulator executes.
  const double dt = cfg.physics_dt;
  const int ticks = std::max(1, static_cast<int>(std::ceil(tau / dt - 1e-9)));
  std::vector<VehicleState> states;
  states.reserve(static_cast<std::size_t>(ticks) + 1);
  TrackingState tracking = start;
  states.push_back(tracking.vehicle);
  for (int k = 0; k < ticks; ++k) {
    tick_tracking(tracking, target_speed, target_steering, params, profile, dt);
    states.push_back(tracking.vehicle);
  }

  const int count = cfg.trajectory_samples;
  std::vector<TrajectorySample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = tau * i / (count - 1);
    const int k = std::min(static_cast<int>(t / dt), ticks - 1);
    const double alpha = t / dt - k;
    const VehicleState& a = states[static_cast<std::size_t>(k)];
    const VehicleState& b = states[static_cast<std::size_t>(k) + 1];
    TrajectorySample s;
    s.t = t;
    s.position = (1.0 - alpha) * a.position + alpha * b.position;
    s.heading = (1.0 - alpha) * a.heading + alpha * b.heading;
    s.speed = (1.0 - alpha) * a.speed + alpha * b.speed;
    s.accel = (b.speed - a.speed) / dt;
    const double steering = (1.0 - alpha) * a.steering + alpha * b.steering;
    s.yaw_rate = s.speed * std::tan(steering) / params.wheelbase();
    samples.push_back(s);
  }
  return samples;
}

bool is_collision_free(const std::vector<TrajectorySample>& trajectory,
                       const ConvexPolygon& ego_footprint,
                       const std::vector<NeighborState>& neighbors, const RoadGraph* graph) {
  const std::vector<NeighborSnapshot> snaps = snapshot_neighbors(neighbors, graph);
  return trajectory_collision_free(trajectory, negated(ego_footprint),
                                   ego_footprint.radius_about_origin(), snaps);
}

CandidateControl lane_keep_candidate(const TrackingState& ego, const VehicleParams& params,
                                     const DynamicsProfile& profile, double v_prime,
                                     double phi_prime,
                                     const std::vector<NeighborState>& neighbors,
                                     const RoadGraph* graph, const PlannerConfig& cfg,
                                     double tau) {
  const std::vector<NeighborSnapshot> snaps = snapshot_neighbors(neighbors, graph);
  const ConvexPolygon neg_ego = negated(params.footprint);
  const double ego_radius = params.footprint.radius_about_origin();

  const auto try_speed = [&](double v, std::vector<TrajectorySample>& trajectory) {
    trajectory = rollout_candidate(ego, v, phi_prime, params, profile, cfg, tau);
    return trajectory_collision_free(trajectory, neg_ego, ego_radius, snaps);
  };

  CandidateControl c;
  c.source = CandidateSource::lane_keep;
  c.target_steering = phi_prime;

  std::vector<TrajectorySample> trajectory;
  if (try_speed(v_prime, trajectory)) {
    c.target_speed = v_prime;
    c.collision_free = true;
    c.trajectory = std::move(trajectory);
  } else if (std::vector<TrajectorySample> stopped; !try_speed(0.0, stopped)) {
    c.target_speed = 0.0;
    c.collision_free = false;
    c.trajectory = std::move(stopped);
  } else {
    double lo = 0.0;
    double hi = v_prime;
    std::vector<TrajectorySample> lo_trajectory = std::move(stopped);
    for (int it = 0; it < kLaneKeepMaxIterations && hi - lo > kLaneKeepSpeedTol; ++it) {
      const double mid = 0.5 * (lo + hi);
      std::vector<TrajectorySample> mid_trajectory;
      if (try_speed(mid, mid_trajectory)) {
        lo = mid;
        lo_trajectory = std::move(mid_trajectory);
      } else {
        hi = mid;
      }
    }
    c.target_speed = lo;
    c.collision_free = true;
    c.trajectory = std::move(lo_trajectory);
  }
  c.feasible = candidate_admissible(c.target_speed, c.target_steering, params, profile);
  return c;
}

PlanResult plan(const TrackingState& ego, const VehicleParams& params,
                const DynamicsProfile& profile, const ArcOrLine& guide, double v_prime,
                double phi_prime, const std::optional<std::pair<double, double>>& prior,
                const std::vector<NeighborState>& neighbors, const RoadGraph* graph,
                const LaneContext& lanes, const RoadTransitionManeuver* next_maneuver,
                const BehaviorOverrides& overrides, const PlannerConfig& cfg,
                const CostWeights& weights) {
  const auto clock_start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&clock_start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     clock_start)
        .count();
  };
  cfg.validate();
  const CostWeights effective = weights_for_behavior(weights, overrides);

  const std::vector<NeighborSnapshot> snaps = snapshot_neighbors(neighbors, graph);
  const ConvexPolygon neg_ego = negated(params.footprint);
  const double ego_radius = params.footprint.radius_about_origin();

  std::vector<double> horizons{cfg.tau};
  for (double fallback : cfg.tau_fallback) {
    if (fallback < cfg.tau - 1e-9) {
      horizons.push_back(fallback);
    }
  }

  PlanResult result;
  for (double tau : horizons) {
    std::vector<CandidateControl> candidates =
        generate_candidates(v_prime, phi_prime, prior, cfg, overrides);
    CandidateControl lane_keep =
        lane_keep_candidate(ego, params, profile, v_prime, phi_prime, neighbors, graph, cfg, tau);
    const bool duplicate =
        std::any_of(candidates.begin(), candidates.end(), [&lane_keep](const CandidateControl& c) {
          return std::abs(c.target_speed - lane_keep.target_speed) < kSpeedDedupTol &&
                 std::abs(c.target_steering - lane_keep.target_steering) < kSteeringDedupTol;
        });
    if (!duplicate) {
      candidates.push_back(std::move(lane_keep));
    }

    const int count = cfg.trajectory_samples;
    std::vector<NeighborTrack> tracks(neighbors.size());
    for (std::size_t j = 0; j < snaps.size(); ++j) {
      tracks[j].type = neighbors[j].type;
      tracks[j].positions.reserve(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        tracks[j].positions.push_back(pose_at(snaps[j].motion, tau * i / (count - 1)).position);
      }
    }

    PlanDiagnostics diag;
    diag.tau_used = tau;
    diag.generated = static_cast<int>(candidates.size());

    std::vector<CandidateScore> scores;
    std::vector<std::size_t> score_to_candidate;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      CandidateControl& c = candidates[k];
      c.feasible = candidate_admissible(c.target_speed, c.target_steering, params, profile);
      if (!c.feasible) {
        ++diag.infeasible;
        continue;
      }
      if (c.trajectory.empty()) {
        c.trajectory =
            rollout_candidate(ego, c.target_speed, c.target_steering, params, profile, cfg, tau);
        c.collision_free = trajectory_collision_free(c.trajectory, neg_ego, ego_radius, snaps);
      }
      if (!c.collision_free) {
        ++diag.blocked;
        continue;
      }
      c.cost = evaluate_candidate(c.trajectory, lanes, guide, v_prime, tau, next_maneuver, tracks,
                                  effective);
      scores.push_back({c.target_speed, c.target_steering, *c.cost});
      score_to_candidate.push_back(k);
      ++diag.scored;
    }

    if (!scores.empty()) {
      Selection selection = *select_best(scores, effective, v_prime, phi_prime);
      selection.index = score_to_candidate[selection.index];
      result.chosen = candidates[selection.index];
      result.selection = selection;
      result.candidates = std::move(candidates);
      result.diagnostics = diag;
      result.diagnostics.wall_time_ms = elapsed_ms();
      return result;
    }
    result.candidates = std::move(candidates);
    result.diagnostics = diag;
  }

  CandidateControl emergency;
  emergency.source = CandidateSource::emergency;
  emergency.target_speed = 0.0;
  emergency.target_steering = phi_prime;
  emergency.feasible = candidate_admissible(0.0, phi_prime, params, profile);
  const double emergency_tau = horizons.back();
  emergency.trajectory =
      rollout_candidate(ego, 0.0, phi_prime, params, profile, cfg, emergency_tau);
  emergency.collision_free =
      trajectory_collision_free(emergency.trajectory, neg_ego, ego_radius, snaps);
  result.chosen = emergency;
  result.selection.reset();
  result.diagnostics.emergency = true;
  result.diagnostics.tau_used = emergency_tau;
  result.candidates.push_back(std::move(emergency));
  result.diagnostics.wall_time_ms = elapsed_ms();
  return result;
}

}  // namespace navsim
