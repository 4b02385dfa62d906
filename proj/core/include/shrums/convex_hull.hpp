#pragma once

#include "shrums/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace shrums {

/// Convex hull of a 3D point set (quickhull). The output vertex set is
/// minimal (no vertex strictly interior), deduplicated within 1e-9 and sorted
/// lexicographically so identical inputs give identical polytopes. Faces are
/// outward-oriented triangles for full-dimensional hulls. Planar, collinear
/// and single-point inputs yield a flagged degenerate polytope (planar hulls
/// keep a fan triangulation for export). Throws on empty input.
ConvexPolytope convex_hull(const std::vector<Vec3>& points);

/// Outward face half-spaces (nx, ny, nz, d) with n·x <= d inside, unit n.
/// Requires a non-degenerate polytope with faces.
std::vector<Eigen::Vector4d> face_planes(const ConvexPolytope& poly);

/// Half-space containment test: max over faces of n·p - d. Negative inside,
/// ~0 on the boundary. Underestimates the Euclidean distance outside edge and
/// vertex regions, which is fine for containment checks.
double hull_plane_distance(const std::vector<Eigen::Vector4d>& planes, const Vec3& p);

/// Enclosed volume from the outward-oriented face list; 0 for degenerate.
double hull_volume(const ConvexPolytope& poly);

/// Axis-aligned box (optionally yawed about its center) as a hull polytope.
ConvexPolytope make_box(const Vec3& center, const Vec3& size, double yaw = 0.0);

}  // namespace shrums
