#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "navsim/costs.hpp"
#include "navsim/dynamics.hpp"
#include "navsim/geometry.hpp"
#include "navsim/pid.hpp"
#include "navsim/road_network.hpp"
#include "navsim/vehicle.hpp"

namespace navsim {

/// Observed state of one nearby agent. Prediction is a pure function of this
/// record: neighbors never react to the ego.
struct NeighborState {
  std::string id;
  NeighborType type = NeighborType::vehicle;
  ConvexPolygon shape = ConvexPolygon::rectangle(1.0, 1.0);  // body frame, origin at center
  Vec2 position = Vec2::Zero();
  double heading = 0.0;          // rad
  Vec2 velocity = Vec2::Zero();  // m/s, world frame
  std::string lane;              // empty when not bound to a lane
  double accel = 0.0;            // m/s^2, along the direction of travel
  double turn_rate = 0.0;        // rad/s

  double speed() const { return velocity.norm(); }
};

struct PredictedPose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

/// Pose at time t >= 0 under the neighbor's motion model. A neighbor with a
/// known lane that sits within half a lane width of that centerline advances
/// along the centerline, keeps its lateral offset, and stops at the
/// centerline's end; speed is floored at zero under braking. Everything else
/// follows the constant-turn-rate, constant-acceleration closed form, also
/// stopping (position and heading frozen) once braking exhausts the speed.
PredictedPose predict_neighbor(const NeighborState& n, const RoadGraph* graph, double t);

/// Footprint rigidly placed at the given pose.
ConvexPolygon predicted_footprint(const NeighborState& n, const PredictedPose& pose);

enum class CandidateSource { grid, prior, lane_keep, emergency };

std::string to_string(CandidateSource source);

struct CandidateControl {
  double target_speed = 0.0;     // m/s
  double target_steering = 0.0;  // rad
  CandidateSource source = CandidateSource::grid;
  bool feasible = false;
  bool collision_free = false;
  std::vector<TrajectorySample> trajectory;  // uniform sample times over [0, tau]
  std::optional<CostBreakdown> cost;         // set only when feasible && collision_free
};

struct PlannerConfig {
  double tau = 4.0;                  // planning horizon, s
  double replan_period = 0.1;        // control update period, s
  double physics_dt = 1.0 / 60.0;    // upper bound on rollout integration steps, s
  int trajectory_samples = 20;       // poses per candidate, both endpoints included
  double grid_speed_span = 3.0;      // m/s, half extent of the candidate grid
  double grid_steering_span = 0.15;  // rad, half extent of the candidate grid
  int grid_size = 9;                 // samples per axis, odd so the center is included
  int prior_grid_size = 3;           // samples per axis around the prior solution, odd
  std::vector<double> tau_fallback = {4.0, 2.0, 1.0, 0.5};

  /// Throws std::invalid_argument when any invariant is broken.
  void validate() const;
};

/// Candidate targets: an odd grid centered on the guiding targets plus a
/// smaller grid centered on the prior solution covering half the span.
/// Target speeds never exceed v_prime: the guide speed already carries the
/// speed limit and every traffic-rule cap, so the grid explores sideways
/// and downward only and rows above the cap collapse onto it. Duplicate
/// pairs merge, negative target speeds are dropped, and behavior overrides
/// scale the steering extent and can confine steering to the guiding side.
/// The lane-keep candidate is found separately because it needs collision
/// checks.
std::vector<CandidateControl> generate_candidates(
    double v_prime, double phi_prime, const std::optional<std::pair<double, double>>& prior,
    const PlannerConfig& cfg, const BehaviorOverrides& overrides);

/// Whether a target pair respects the vehicle's speed and steering ranges
/// and holds traction at the implied curvature.
bool candidate_admissible(double target_speed, double target_steering,
                          const VehicleParams& params, const DynamicsProfile& profile);

/// A vehicle plus the two controllers tracking its targets. The planner's
/// rollouts and the simulator step the same type with the same function, so
/// the planned trajectory is the executed one.
struct TrackingState {
  VehicleState vehicle;
  PidController speed_pid{speed_pid_gains()};
  PidController steering_pid{steering_pid_gains()};
};

/// One closed-loop step: both control loops then an RK4 step, all at dt.
void tick_tracking(TrackingState& tracking, double target_speed, double target_steering,
                   const VehicleParams& params, const DynamicsProfile& profile, double dt);

/// Closed-loop forward integration of one candidate: cfg.trajectory_samples
/// poses at uniform times over [0, tau], integrated in equal substeps no
/// longer than cfg.physics_dt.
std::vector<TrajectorySample> rollout_candidate(const TrackingState& start, double target_speed,
                                                double target_steering,
                                                const VehicleParams& params,
                                                const DynamicsProfile& profile,
                                                const PlannerConfig& cfg, double tau);

/// True iff at every trajectory sample the ego center relative to each
/// predicted neighbor center stays outside the configuration obstacle
/// O_n (+) -O_e, with both footprints oriented at their sampled poses.
bool is_collision_free(const std::vector<TrajectorySample>& trajectory,
                       const ConvexPolygon& ego_footprint,
                       const std::vector<NeighborState>& neighbors, const RoadGraph* graph);

/// Candidate that holds the guiding steering at the collision-free target
/// speed closest to v_prime, located by bisection over closed-loop rollouts.
/// When even a full stop is blocked the result is marked not collision_free.
CandidateControl lane_keep_candidate(const TrackingState& ego, const VehicleParams& params,
                                     const DynamicsProfile& profile, double v_prime,
                                     double phi_prime,
                                     const std::vector<NeighborState>& neighbors,
                                     const RoadGraph* graph, const PlannerConfig& cfg,
                                     double tau);

struct PlanDiagnostics {
  double tau_used = 0.0;
  bool emergency = false;
  int generated = 0;   // candidates after dedup, lane-keep included
  int infeasible = 0;  // rejected by envelope or traction limits
  int blocked = 0;     // feasible but in predicted collision
  int scored = 0;      // survivors that received a cost
  double wall_time_ms = 0.0;
};

struct PlanResult {
  CandidateControl chosen;
  std::optional<Selection> selection;  // set unless the emergency control was used
  PlanDiagnostics diagnostics;
  std::vector<CandidateControl> candidates;  // the evaluated set at the final tau
};

/// One planning cycle: generate candidates, drop inadmissible targets, roll
/// the rest forward, discard predicted collisions, and pick the cheapest
/// survivor. When nothing survives, the horizon drops through the fallback
/// schedule; when nothing survives at the shortest horizon, the result is
/// maximal braking along phi_prime. Candidate evaluations only read shared
/// immutable snapshots and write their own records.
PlanResult plan(const TrackingState& ego, const VehicleParams& params,
                const DynamicsProfile& profile, const ArcOrLine& guide, double v_prime,
                double phi_prime, const std::optional<std::pair<double, double>>& prior,
                const std::vector<NeighborState>& neighbors, const RoadGraph* graph,
                const LaneContext& lanes, const RoadTransitionManeuver* next_maneuver,
                const BehaviorOverrides& overrides, const PlannerConfig& cfg,
                const CostWeights& weights);

}  // namespace navsim
