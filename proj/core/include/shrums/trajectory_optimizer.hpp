#pragma once

#include "shrums/convex_decomposition.hpp"
#include "shrums/geometry.hpp"
#include "shrums/proximity.hpp"

#include <atomic>
#include <optional>
#include <vector>

namespace shrums {

struct PlannerConfig {
  double horizon_m = 10.0;
  double states_per_meter = 1.0;
  double d_safe = 0.3;
  /// Weight w on the local-goal-to-global-goal term.
  double goal_weight = 1.0;
  /// Lambda in meters/radian: makes rotation commensurable with translation
  /// inside the 6-DOF path norm.
  double orientation_weight = 0.5;
  int max_outer_iterations = 60;
  /// Feasibility tolerance in meters for both clearance and the horizon.
  double constraint_tolerance = 1e-3;
  double penalty_growth = 5.0;
  double initial_penalty = 10.0;
  /// Roll is pinned to the start value (typical AUV operation).
  bool lock_roll = true;
  /// Constraints further than d_safe + margin from violation stay out of the
  /// convex model for the iteration.
  double activation_margin = 0.75;

  void validate() const;
  int state_count() const;  // ceil(H * states_per_meter) + 1
};

enum class PlanStatus { Converged, NoConvergence, InfeasibleStart, Cancelled };

struct IterationTrace {
  int iteration = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  double penalty = 0.0;
  double trust = 0.0;  // proximal weight playing the trust-region role
};

struct PathSolution {
  std::vector<Pose6> states;  // states[0] == start, bit-exact
  double objective = 0.0;
  bool feasible = false;
  /// Independent post-hoc certificate (exact min_clearance), not the solver's
  /// own bookkeeping.
  double min_clearance = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  PlanStatus status = PlanStatus::NoConvergence;
  bool goal_within_horizon = false;
  std::vector<IterationTrace> trace;
};

/// Sum of weighted 6-DOF segment norms plus w * weighted distance from the
/// terminal state to the goal, with sqrt(|dt|^2 + lambda^2 |wrapped da|^2)
/// as the state metric.
double objective(const std::vector<Pose6>& states, const Pose6& goal, double w,
                 double lambda);

enum class WarmStartMode { Linear, Previous };

/// Linear: states interpolated from new_start toward the goal, truncated at
/// the horizon. Previous: the previous path re-rooted at new_start, consumed
/// states dropped and the tail extrapolated along the last heading; falls
/// back to Linear when the previous path is fully consumed.
std::vector<Pose6> warm_start(const PathSolution* previous, const Pose6& new_start,
                              const Pose6& goal, const PlannerConfig& config,
                              WarmStartMode mode);

/// Receding-horizon path optimization: minimizes the weighted 6-DOF objective
/// subject to swept-volume clearance >= d_safe against every obstacle and the
/// horizon constraint |s_n - s_1| = H (relaxed to <= H when the goal sits
/// inside the horizon). Sequential convexification: per outer iteration the
/// clearance constraints are linearized through proximity witness normals,
/// the convex subproblem is solved by a proximally damped quasi-Newton
/// method, and exterior penalties grow until violations drop below tolerance
/// or the iteration cap. The returned solution is re-certified with the exact
/// min_clearance regardless of solver status; `cancel` aborts between outer
/// iterations and returns the best iterate, flagged.
PathSolution plan(const Pose6& start, const Pose6& global_goal,
                  const ObstacleSet& obstacles, const ConvexPolytope& robot,
                  const PlannerConfig& config,
                  const std::vector<Pose6>* warm = nullptr,
                  const std::atomic<bool>* cancel = nullptr);

/// Convex-hull box of 0.66 x 0.55 x 0.13 m approximating a small AUV body.
ConvexPolytope default_robot_body();

}  // namespace shrums
