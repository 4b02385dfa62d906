#pragma once

#include "shrums/convex_hull.hpp"
#include "shrums/geometry.hpp"

#include <vector>

namespace shrums {

/// Result of a signed-distance query. Positive distance = minimal separation
/// with witness_a/witness_b the mutually closest points; negative distance =
/// penetration depth (minimal translation to separate) with the witnesses at
/// the deepest supports. `axis` is the unit contact normal pointing from body
/// a toward body b; translating a by -|sd|*axis resolves a penetration.
struct ProximityResult {
  double signed_distance = 0.0;
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
};

/// GJK for separation, EPA for penetration depth. Operands are internally
/// put in a canonical order so the query is exactly symmetric in its
/// arguments. Degenerate (flat/segment/point) polytopes are fine.
ProximityResult signed_distance(const ConvexPolytope& a, const ConvexPolytope& b);

/// Same query with the robot swept between the two placements, i.e. against
/// ch(Ti * robot, Tj * robot), evaluated through the support function without
/// building the hull. Extra fields feed the planner's constraint
/// linearization.
struct SweptContact {
  double signed_distance = 0.0;
  Vec3 axis = Vec3::UnitX();  // from the swept robot toward the obstacle
  Vec3 witness_robot = Vec3::Zero();
  Vec3 witness_obstacle = Vec3::Zero();
  /// Fraction of the robot-side witness carried by the first placement, and
  /// the barycentric body-frame support sums per placement (unnormalized).
  double mass_first = 1.0;
  Vec3 local_first = Vec3::Zero();
  Vec3 local_second = Vec3::Zero();
};
SweptContact swept_signed_distance(const ConvexPolytope& robot,
                                   const RigidTransform& placement_i,
                                   const RigidTransform& placement_j,
                                   const ConvexPolytope& obstacle);

/// Convex hull of the robot's vertices at both states: ch(A_si, A_sj).
/// Over-approximates the true swept volume under rotation, which keeps the
/// continuous-time guarantee conservative.
ConvexPolytope swept_hull(const ConvexPolytope& robot, const Pose6& si, const Pose6& sj);

struct ObstacleSet;  // convex_decomposition.hpp

struct ClearanceReport {
  double min_clearance = 0.0;
  int worst_segment = -1;   // index i of the (s_i, s_i+1) segment
  int worst_obstacle = -1;
};

/// Minimum over path segments and obstacles of
/// signed_distance(swept_hull(segment), obstacle). Serves as the planner's
/// independent feasibility certificate. Empty obstacle set yields +inf.
ClearanceReport min_clearance(const ConvexPolytope& robot,
                              const std::vector<Pose6>& path,
                              const ObstacleSet& obstacles);

/// Signed distance lower bound between two AABBs: Euclidean gap when
/// disjoint, negative smallest per-axis overlap otherwise. Always a lower
/// bound on the signed distance of the enclosed bodies.
double aabb_signed_distance(const Vec3& lo_a, const Vec3& hi_a,
                            const Vec3& lo_b, const Vec3& hi_b);

}  // namespace shrums
