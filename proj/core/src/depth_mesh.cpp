#include "shrums/depth_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_set>

namespace shrums {

bool TriangleMesh::valid_indices() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& t : triangles)
    for (int i : t)
      if (i < 0 || i >= n) return false;
  return triangles.size() == normals.size();
}

void TriangleMesh::aabb(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

UnprojectResult unproject(const DepthImage& img) {
  const Intrinsics k = intrinsics_from_sensor(img.sensor);
  const RigidTransform world_from_sensor = pose_to_transform(img.pose);

  UnprojectResult res;
  res.cloud.frame = Frame::World;
  res.vertex_of_pixel.assign(static_cast<std::size_t>(img.width) * img.height, -1);
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      if (!img.defined(u, v)) continue;
      const double r = img.at(u, v);
      const Vec3 sensor_pt(r,
                           -r * (u + 0.5 - k.cx) / k.fx,
                           -r * (v + 0.5 - k.cy) / k.fy);
      res.vertex_of_pixel[static_cast<std::size_t>(v) * img.width + u] =
          static_cast<int>(res.cloud.points.size());
      res.cloud.points.push_back(world_from_sensor.apply(sensor_pt));
    }
  }
  return res;
}

namespace {

struct Corner {
  int vertex = -1;
  double depth = 0.0;
  bool defined() const { return vertex >= 0; }
};

}  // namespace

TriangleMesh triangulate(const DepthImage& img, const MeshingLimits& limits) {
  const UnprojectResult un = unproject(img);
  const Intrinsics k = intrinsics_from_sensor(img.sensor);
  const Vec3 origin = img.pose.translation();
  const double pixel_spacing = std::max(1.0 / k.fx, 1.0 / k.fy);
  const double cos_cone = std::cos(deg_to_rad(limits.normal_cone_deg));

  TriangleMesh mesh;
  mesh.vertices = un.cloud.points;
  std::unordered_set<uint64_t> seen_faces;

  auto edge_ok = [&](const Corner& a, const Corner& b) {
    const double cap = limits.max_edge_m
                           ? *limits.max_edge_m
                           : limits.edge_scale * std::min(a.depth, b.depth) * pixel_spacing;
    return (mesh.vertices[a.vertex] - mesh.vertices[b.vertex]).norm() <= cap;
  };

  auto emit = [&](const Corner& a, const Corner& b, const Corner& c) {
    if (!edge_ok(a, b) || !edge_ok(b, c) || !edge_ok(c, a)) return;
    const Vec3& pa = mesh.vertices[a.vertex];
    const Vec3& pb = mesh.vertices[b.vertex];
    const Vec3& pc = mesh.vertices[c.vertex];
    Vec3 n = (pb - pa).cross(pc - pa);
    const double len = n.norm();
    if (len * 0.5 <= 1e-12) return;  // zero-area
    n /= len;
    std::array<int, 3> tri = {a.vertex, b.vertex, c.vertex};
    const Vec3 view = ((pa + pb + pc) / 3.0 - origin).normalized();
    if (n.dot(view) > 0.0) {  // flip to face the sensor
      n = -n;
      std::swap(tri[1], tri[2]);
    }
    if (-n.dot(view) < cos_cone) return;  // grazing surface

    std::array<int, 3> key = tri;
    std::sort(key.begin(), key.end());
    const uint64_t h = (static_cast<uint64_t>(key[0]) * 2654435761u) ^
                       (static_cast<uint64_t>(key[1]) << 21) ^
                       (static_cast<uint64_t>(key[2]) << 42);
    if (!seen_faces.insert(h).second) return;

    mesh.triangles.push_back(tri);
    mesh.normals.push_back(n);
  };

  for (int v = 0; v + 1 < img.height; ++v) {
    for (int u = 0; u + 1 < img.width; ++u) {
      auto corner = [&](int du, int dv) {
        Corner c;
        c.vertex = un.vertex_of_pixel[static_cast<std::size_t>(v + dv) * img.width + (u + du)];
        if (c.vertex >= 0) c.depth = img.at(u + du, v + dv);
        return c;
      };
      const Corner c00 = corner(0, 0), c10 = corner(1, 0);
      const Corner c01 = corner(0, 1), c11 = corner(1, 1);
      const int defined = c00.defined() + c10.defined() + c01.defined() + c11.defined();
      if (defined < 3) continue;

      if (defined == 4) {
        // Split along the diagonal with the smaller depth jump; ties take the
        // main diagonal so the traversal stays deterministic.
        if (std::abs(c00.depth - c11.depth) <= std::abs(c10.depth - c01.depth)) {
          emit(c00, c10, c11);
          emit(c00, c11, c01);
        } else {
          emit(c00, c10, c01);
          emit(c10, c11, c01);
        }
      } else if (!c00.defined()) {
        emit(c10, c11, c01);
      } else if (!c10.defined()) {
        emit(c00, c11, c01);
      } else if (!c01.defined()) {
        emit(c00, c10, c11);
      } else {
        emit(c00, c10, c01);
      }
    }
  }
  return mesh;
}

}  // namespace shrums
