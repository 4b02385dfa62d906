#pragma once

#include "shrums/convex_hull.hpp"
#include "shrums/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace shrums {

/// Ground-truth world for synthetic missions: a set of convex obstacles.
struct Scene {
  std::string name;
  std::vector<ConvexPolytope> obstacles;

  /// Dense sampling of every obstacle face at roughly the given spacing;
  /// feeds the synthetic scan generator.
  PointCloud sample_surfaces(double spacing) const;
};

/// Container-like open box: three walls and a roof forming a hollow shell the
/// robot has to skirt on the way to a goal behind it.
Scene scene_container();
/// Scattered field of convex clusters flanking the straight-line route.
Scene scene_scatter();
/// Grid of vertical pillars for multi-goal weaving.
Scene scene_pillars();

std::optional<Scene> scene_by_name(const std::string& name);

}  // namespace shrums
