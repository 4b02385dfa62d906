#include "shrums/scenes.hpp"

#include <algorithm>
#include <cmath>

namespace shrums {

PointCloud Scene::sample_surfaces(double spacing) const {
  PointCloud cloud;
  cloud.frame = Frame::World;
  for (const ConvexPolytope& poly : obstacles) {
    for (const auto& f : poly.faces) {
      const Vec3& a = poly.vertices[f[0]];
      const Vec3& b = poly.vertices[f[1]];
      const Vec3& c = poly.vertices[f[2]];
      const double longest =
          std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
      const int n = std::max(1, static_cast<int>(std::ceil(longest / spacing)));
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j + i <= n; ++j)
          cloud.points.push_back(a + (b - a) * (static_cast<double>(i) / n) +
                                 (c - a) * (static_cast<double>(j) / n));
    }
  }
  return cloud;
}

Scene scene_container() {
  Scene scene;
  scene.name = "container";
  const double t = 0.2;  // wall thickness
  // Shell centered at x=10, open toward the robot's approach (-x side).
  scene.obstacles.push_back(make_box({10.0, -2.0, 0.0}, {4.0, t, 2.4}));  // side wall
  scene.obstacles.push_back(make_box({10.0, 2.0, 0.0}, {4.0, t, 2.4}));   // side wall
  scene.obstacles.push_back(make_box({12.0, 0.0, 0.0}, {t, 4.2, 2.4}));   // back wall
  scene.obstacles.push_back(make_box({10.0, 0.0, 1.3}, {4.0, 4.2, t}));   // roof
  return scene;
}

Scene scene_scatter() {
  Scene scene;
  scene.name = "scatter";
  scene.obstacles.push_back(make_box({6.0, 0.8, 0.0}, {1.2, 1.0, 1.6}, 0.4));
  scene.obstacles.push_back(make_box({9.0, -1.4, 0.3}, {1.0, 1.4, 1.2}, -0.3));
  scene.obstacles.push_back(make_box({11.5, 1.2, -0.4}, {1.4, 1.0, 1.0}, 0.9));
  scene.obstacles.push_back(make_box({13.0, -0.6, 0.2}, {0.9, 1.2, 1.4}, 0.2));
  scene.obstacles.push_back(make_box({15.5, 0.9, 0.0}, {1.2, 1.2, 1.2}, -0.7));
  scene.obstacles.push_back(make_box({17.0, -1.2, -0.2}, {1.0, 0.9, 1.3}, 0.5));
  return scene;
}

Scene scene_pillars() {
  Scene scene;
  scene.name = "pillars";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      scene.obstacles.push_back(
          make_box({7.0 + 3.0 * i, -3.0 + 3.0 * j, 0.0}, {0.6, 0.6, 3.0}));
  return scene;
}

std::optional<Scene> scene_by_name(const std::string& name) {
  if (name == "container") return scene_container();
  if (name == "scatter") return scene_scatter();
  if (name == "pillars") return scene_pillars();
  return std::nullopt;
}

}  // namespace shrums
