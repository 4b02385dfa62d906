#pragma once

#include "shrums/depth_image.hpp"
#include "shrums/geometry.hpp"

#include <array>
#include <optional>
#include <vector>

namespace shrums {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> normals;  // per triangle, unit, oriented toward the sensor

  bool empty() const { return triangles.empty(); }
  bool valid_indices() const;
  void aabb(Vec3& lo, Vec3& hi) const;
};

struct UnprojectResult {
  PointCloud cloud;                 // world frame, one point per defined cell
  std::vector<int> vertex_of_pixel; // W*H row-major, -1 where undefined
};

/// Back-projects every defined cell through the pixel center:
///   sensor point = (r, -r*(u+0.5-cx)/fx, -r*(v+0.5-cy)/fy)
/// then into the world frame via the image's sensor pose.
UnprojectResult unproject(const DepthImage& img);

struct MeshingLimits {
  /// Edge length cap as a multiple of the expected inter-pixel spacing at the
  /// nearer endpoint's depth. Chosen over a fixed metric cap because a fixed
  /// value either over-connects near geometry or shreds far geometry.
  double edge_scale = 6.0;
  /// Absolute cap in meters; overrides the depth-adaptive rule when set.
  std::optional<double> max_edge_m;
  /// Triangles whose normal is more than this angle away from facing the
  /// sensor are dropped.
  double normal_cone_deg = 85.0;
};

/// Pixel-adjacency triangulation: every 2x2 patch with >= 3 defined corners
/// emits up to two triangles (quads split along the diagonal with the smaller
/// depth jump). Candidates are filtered by edge length, duplicate faces,
/// zero area, and normal/view-ray consistency. Runs linearly in pixel count
/// with a fixed row-major traversal, so identical inputs give identical
/// meshes.
TriangleMesh triangulate(const DepthImage& img, const MeshingLimits& limits = {});

}  // namespace shrums
