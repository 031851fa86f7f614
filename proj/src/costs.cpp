#include "navsim/costs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace navsim {

std::string to_string(NeighborType type) {
  switch (type) {
    case NeighborType::vehicle: return "vehicle";
    case NeighborType::pedestrian: return "pedestrian";
    case NeighborType::cyclist: return "cyclist";
    case NeighborType::obstruction: return "obstruction";
  }
  return "unknown";
}

double CostWeights::proximity_constant(NeighborType type) const {
  switch (type) {
    case NeighborType::vehicle: return c_vehicle;
    case NeighborType::pedestrian: return c_pedestrian;
    case NeighborType::cyclist: return c_cyclist;
    case NeighborType::obstruction: return c_obstruction;
  }
  return c_vehicle;
}

void CostWeights::validate() const {
  const double values[] = {w_vel,  w_drift, w_prog,     w_accel,      w_yawr,       w_lane,
                           w_mdist, w_prox, c_vehicle, c_cyclist, c_pedestrian, c_obstruction};
  for (double v : values) {
    if (!(v >= 0.0)) throw std::invalid_argument("cost weights must be nonnegative");
  }
  if (c_pedestrian < c_cyclist || c_cyclist < c_vehicle) {
    throw std::invalid_argument(
        "proximity constants must order pedestrian >= cyclist >= vehicle");
  }
}

CostWeights weights_for_behavior(CostWeights weights, const BehaviorOverrides& overrides) {
  weights.w_drift *= overrides.drift_weight_scale;
  weights.w_mdist *= overrides.wrong_lane_weight_scale;
  return weights;
}

LaneAssignment assign_lanes(const std::vector<TrajectorySample>& samples,
                            const LaneContext& lanes) {
  if (!lanes.current) throw std::invalid_argument("lane context needs a current lane");

  LaneAssignment out;
  out.governing.reserve(samples.size());
  const Lane* governing = lanes.current;
  const double half_width = 0.5 * lanes.current->width;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!out.changed) {
      const double offset = signed_lateral_offset(*lanes.current, samples[i].position);
      if (offset > half_width && lanes.left) {
        out.changed = true;
        out.direction = 1;
        out.first_crossing = i;
        governing = lanes.left;
      } else if (offset < -half_width && lanes.right) {
        out.changed = true;
        out.direction = -1;
        out.first_crossing = i;
        governing = lanes.right;
      }
    }
    out.governing.push_back(governing);
  }
  return out;
}

PathCost path_cost(const std::vector<TrajectorySample>& samples,
                   const LaneAssignment& assignment, const ArcOrLine& guide, double v_prime,
                   double tau) {
  if (assignment.governing.size() != samples.size()) {
    throw std::invalid_argument("lane assignment does not match the sample count");
  }

  PathCost out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dv = v_prime - samples[i].speed;
    out.vel += dv * dv;
    // Lateral offset only: a sample beyond the end of the centerline is
    // measured against the extended end segment, not the endpoint, so
    // along-track overrun past a lane end carries no drift penalty.
    const double lateral = signed_lateral_offset(*assignment.governing[i], samples[i].position);
    out.drift += lateral * lateral;
  }

  if (!samples.empty()) {
    const Vec2 target = guide.point_along(v_prime * tau) - guide.start;
    const double reach = target.norm();
    if (reach > 1e-9) {
      const Vec2 axis = target / reach;
      const Vec2 displacement = samples.back().position - guide.start;
      const double along = displacement.dot(axis);
      out.prog = std::abs(reach - along) / reach;
    }
  }
  return out;
}

ComfortCost comfort_cost(const std::vector<TrajectorySample>& samples) {
  ComfortCost out;
  for (const TrajectorySample& s : samples) {
    out.accel += std::abs(s.accel);
    out.yaw_rate += std::abs(s.yaw_rate);
  }
  return out;
}

ManeuverCost maneuver_cost(const std::vector<TrajectorySample>& samples,
                           const LaneAssignment& assignment,
                           const RoadTransitionManeuver* next) {
  if (assignment.governing.size() != samples.size()) {
    throw std::invalid_argument("lane assignment does not match the sample count");
  }

  ManeuverCost out;
  out.lane_change = assignment.changed ? 1.0 : 0.0;
  if (!next) return out;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Lane* lane = assignment.governing[i];
    const bool wrong_lane =
        std::find(next->source_lanes.begin(), next->source_lanes.end(), lane->id) ==
        next->source_lanes.end();
    if (!wrong_lane) continue;
    const double distance = (samples[i].position - next->trigger_position).norm();
    out.wrong_lane += 1.0 / std::max(distance, kManeuverDistanceFloor);
  }
  return out;
}

double proximity_cost(const std::vector<TrajectorySample>& samples,
                      const std::vector<NeighborTrack>& neighbors,
                      const CostWeights& weights) {
  double out = 0.0;
  for (const NeighborTrack& track : neighbors) {
    if (track.positions.size() != samples.size()) {
      throw std::invalid_argument("neighbor track does not match the sample count");
    }
    const double constant = weights.proximity_constant(track.type);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      out += constant * std::exp(-(track.positions[i] - samples[i].position).norm());
    }
  }
  return out;
}

double CostBreakdown::total(const CostWeights& weights) const {
  return weights.w_vel * vel + weights.w_drift * drift + weights.w_prog * prog +
         weights.w_accel * accel + weights.w_yawr * yaw_rate + weights.w_lane * lane_change +
         weights.w_mdist * wrong_lane + weights.w_prox * proximity;
}

CostBreakdown evaluate_candidate(const std::vector<TrajectorySample>& samples,
                                 const LaneContext& lanes, const ArcOrLine& guide,
                                 double v_prime, double tau,
                                 const RoadTransitionManeuver* next_maneuver,
                                 const std::vector<NeighborTrack>& neighbors,
                                 const CostWeights& weights) {
  const LaneAssignment assignment = assign_lanes(samples, lanes);
  const PathCost path = path_cost(samples, assignment, guide, v_prime, tau);
  const ComfortCost comfort = comfort_cost(samples);
  const ManeuverCost maneuver = maneuver_cost(samples, assignment, next_maneuver);

  CostBreakdown out;
  out.vel = path.vel;
  out.drift = path.drift;
  out.prog = path.prog;
  out.accel = comfort.accel;
  out.yaw_rate = comfort.yaw_rate;
  out.lane_change = maneuver.lane_change;
  out.wrong_lane = maneuver.wrong_lane;
  out.proximity = proximity_cost(samples, neighbors, weights);
  out.lane_changed = assignment.changed;
  out.lane_change_direction = assignment.direction;

  out.per_sample.assign(samples.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dv = v_prime - samples[i].speed;
    const double lateral = signed_lateral_offset(*assignment.governing[i], samples[i].position);
    double c = weights.w_vel * dv * dv + weights.w_drift * lateral * lateral +
               weights.w_accel * std::abs(samples[i].accel) +
               weights.w_yawr * std::abs(samples[i].yaw_rate);
    if (next_maneuver) {
      const Lane* lane = assignment.governing[i];
      const bool wrong_lane = std::find(next_maneuver->source_lanes.begin(),
                                        next_maneuver->source_lanes.end(),
                                        lane->id) == next_maneuver->source_lanes.end();
      if (wrong_lane) {
        const double distance = (samples[i].position - next_maneuver->trigger_position).norm();
        c += weights.w_mdist / std::max(distance, kManeuverDistanceFloor);
      }
    }
    for (const NeighborTrack& track : neighbors) {
      c += weights.w_prox * weights.proximity_constant(track.type) *
           std::exp(-(track.positions[i] - samples[i].position).norm());
    }
    if (i + 1 == samples.size()) c += weights.w_prog * out.prog;
    out.per_sample[i] = c;
  }
  return out;
}

std::optional<Selection> select_best(const std::vector<CandidateScore>& candidates,
                                     const CostWeights& weights, double v_prime,
                                     double phi_prime) {
  if (candidates.empty()) return std::nullopt;

  std::size_t best = 0;
  double best_total = candidates[0].breakdown.total(weights);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double total = candidates[i].breakdown.total(weights);
    const auto key = [&](std::size_t idx, double t) {
      return std::make_tuple(t, std::abs(candidates[idx].target_steering - phi_prime),
                             std::abs(candidates[idx].target_speed - v_prime), idx);
    };
    if (key(i, total) < key(best, best_total)) {
      best = i;
      best_total = total;
    }
  }

  Selection out;
  out.index = best;
  out.total = best_total;
  out.lane_change_planned = candidates[best].breakdown.lane_changed;
  out.lane_change_direction = candidates[best].breakdown.lane_change_direction;
  return out;
}

}  // namespace navsim
