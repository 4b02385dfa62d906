#pragma once

#include "shrums/convex_hull.hpp"
#include "shrums/depth_mesh.hpp"
#include "shrums/geometry.hpp"

#include <string>
#include <vector>

namespace shrums {

struct DecompositionParams {
  /// Concavity bound in meters; parts above it keep splitting.
  double concavity_threshold = 0.05;
  /// Maximum number of recursive splits per connected component.
  int max_depth = 4;
  /// Optional pre-decomposition vertex clustering grid (cells per axis on the
  /// mesh bounding box); 0 disables it. Depth meshes are regular enough that
  /// the default is off.
  int preprocess_resolution = 0;
  /// Number of candidate cut planes scored per split.
  int search_nodes = 10;
  /// Extra refinement evaluations around the best candidate plane.
  int search_iterations = 60;

  void validate() const;

  /// Tuned operating point: threshold 0.034 of the mesh bounding-box diagonal
  /// (the usual normalized-concavity convention, converted here to meters),
  /// depth 1, clustering 25, 10 candidate planes, 60 refinement steps.
  static DecompositionParams tuned_preset(const TriangleMesh& mesh);
};

struct ObstaclePart {
  ConvexPolytope polytope;
  double concavity = 0.0;
  /// Set when the part still exceeded the threshold at max depth. The hull
  /// over-approximates, so the planner treats it as a valid obstacle anyway.
  bool over_threshold = false;
};

struct ObstacleSet {
  std::vector<ObstaclePart> parts;
  std::string source_id;
  double timestamp = 0.0;

  bool empty() const { return parts.empty(); }
};

/// Max over sampled surface points (vertices, edge midpoints, face centroids)
/// of the distance to the part's convex-hull surface. Zero for convex parts
/// and for flat (degenerate-hull) parts.
double concavity(const TriangleMesh& part);

/// Approximate convex decomposition: split by connected components, then
/// recursively cut any part whose concavity exceeds the threshold with the
/// best of a budgeted set of axis-aligned quantile planes and principal-axis
/// planes (scored by the children's summed concavity), up to max_depth cuts.
/// Each final part becomes the convex hull of its vertices, so the output
/// always covers the input geometry. Parts are ordered by centroid.
ObstacleSet decompose(const TriangleMesh& mesh, const DecompositionParams& params);

}  // namespace shrums
