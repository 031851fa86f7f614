#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "navsim/geometry.hpp"
#include "navsim/road_network.hpp"

namespace navsim {

enum class NeighborType { vehicle, pedestrian, cyclist, obstruction };

std::string to_string(NeighborType type);

/// One integrated pose along a candidate trajectory. Rates are the
/// integrator's values at the sample time.
struct TrajectorySample {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double speed = 0.0;     // m/s
  double accel = 0.0;     // m/s^2
  double yaw_rate = 0.0;  // rad/s
};

/// A neighbor's predicted reference positions, aligned index-for-index with
/// the candidate's samples.
struct NeighborTrack {
  NeighborType type = NeighborType::vehicle;
  std::vector<Vec2> positions;
};

/// Objective weights and per-type proximity constants. Pedestrians and
/// cyclists must cost at least as much to approach as vehicles.
struct CostWeights {
  double w_vel = 0.5;
  double w_drift = 0.2;
  double w_prog = 2.0;
  double w_accel = 0.1;
  double w_yawr = 0.3;
  double w_lane = 1.0;
  double w_mdist = 5.0;
  double w_prox = 1.0;

  double c_vehicle = 1.0;
  double c_cyclist = 3.0;
  double c_pedestrian = 5.0;
  double c_obstruction = 1.0;

  double proximity_constant(NeighborType type) const;

  /// Throws std::invalid_argument when any invariant is broken.
  void validate() const;
};

/// Copy of the weights with the behavior's drift and wrong-lane scaling
/// applied.
CostWeights weights_for_behavior(CostWeights weights, const BehaviorOverrides& overrides);

/// The ego's lane and its immediate neighbors at planning time. Adjacent
/// entries may be null when no such lane exists.
struct LaneContext {
  const Lane* current = nullptr;
  const Lane* left = nullptr;
  const Lane* right = nullptr;
};

/// Which lane governs each sample: the current lane until the trajectory
/// leaves its half-width band toward an existing neighbor, that neighbor
/// lane from the first crossing onward.
struct LaneAssignment {
  std::vector<const Lane*> governing;
  bool changed = false;
  int direction = 0;  // +1 toward left_lane, -1 toward right_lane
  std::size_t first_crossing = static_cast<std::size_t>(-1);
};

LaneAssignment assign_lanes(const std::vector<TrajectorySample>& samples,
                            const LaneContext& lanes);

struct PathCost {
  double vel = 0.0;    // sum of (v' - v_i)^2
  double drift = 0.0;  // sum of squared lateral distance to the governing lane
  double prog = 0.0;   // final-sample progress shortfall along the reference
};

/// Path-tracking terms. The reference displacement is the point reached by
/// following the guiding geometry at v_prime for tau, relative to its start.
PathCost path_cost(const std::vector<TrajectorySample>& samples,
                   const LaneAssignment& assignment, const ArcOrLine& guide, double v_prime,
                   double tau);

struct ComfortCost {
  double accel = 0.0;     // sum of |dv/dt|
  double yaw_rate = 0.0;  // sum of |dtheta/dt|
};

ComfortCost comfort_cost(const std::vector<TrajectorySample>& samples);

struct ManeuverCost {
  double lane_change = 0.0;  // 1 when the candidate crosses a lane boundary
  double wrong_lane = 0.0;   // sum of reciprocal distances to the maneuver point
};

/// Reciprocal distances are floored at this separation to stay bounded.
inline constexpr double kManeuverDistanceFloor = 0.5;  // m

ManeuverCost maneuver_cost(const std::vector<TrajectorySample>& samples,
                           const LaneAssignment& assignment,
                           const RoadTransitionManeuver* next);

/// Sum over samples and neighbors of C_type * exp(-distance). Track lengths
/// must match the sample count.
double proximity_cost(const std::vector<TrajectorySample>& samples,
                      const std::vector<NeighborTrack>& neighbors,
                      const CostWeights& weights);

/// Full per-candidate objective. Everything except lane_change accumulates
/// per sample; lane_change is charged once per candidate.
struct CostBreakdown {
  double vel = 0.0;
  double drift = 0.0;
  double prog = 0.0;
  double accel = 0.0;
  double yaw_rate = 0.0;
  double lane_change = 0.0;
  double wrong_lane = 0.0;
  double proximity = 0.0;

  bool lane_changed = false;
  int lane_change_direction = 0;  // +1 left, -1 right

  /// Weighted per-sample contributions (lane_change excluded: it is not a
  /// per-sample term).
  std::vector<double> per_sample;

  double total(const CostWeights& weights) const;
};

CostBreakdown evaluate_candidate(const std::vector<TrajectorySample>& samples,
                                 const LaneContext& lanes, const ArcOrLine& guide,
                                 double v_prime, double tau,
                                 const RoadTransitionManeuver* next_maneuver,
                                 const std::vector<NeighborTrack>& neighbors,
                                 const CostWeights& weights);

/// One candidate as seen by the selector.
struct CandidateScore {
  double target_speed = 0.0;
  double target_steering = 0.0;
  CostBreakdown breakdown;
};

struct Selection {
  std::size_t index = 0;
  double total = 0.0;
  bool lane_change_planned = false;
  int lane_change_direction = 0;
};

/// Argmin of the weighted total. Exact ties resolve toward the candidate
/// closest to the guiding targets: smaller |phi - phi'|, then |v - v'|,
/// then index. Empty input returns nullopt so the caller can fall back.
std::optional<Selection> select_best(const std::vector<CandidateScore>& candidates,
                                     const CostWeights& weights, double v_prime,
                                     double phi_prime);

}  // namespace navsim
