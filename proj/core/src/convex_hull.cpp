#include "shrums/convex_hull.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace shrums {

namespace {

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

struct Face {
  int v[3];
  Vec3 normal;    // unit, outward
  double offset;  // normal . x = offset
  std::vector<int> outside;
  int furthest = -1;
  double furthest_dist = 0.0;
  bool alive = true;
};

struct Builder {
  const std::vector<Vec3>& pts;
  double eps;
  std::vector<Face> faces;
  std::unordered_map<uint64_t, std::array<int, 2>> edge_faces;
  Vec3 interior = Vec3::Zero();
  bool failed = false;

  explicit Builder(const std::vector<Vec3>& p, double e) : pts(p), eps(e) {}

  double dist(const Face& f, int i) const { return f.normal.dot(pts[i]) - f.offset; }

  void link_edge(int a, int b, int face_id) {
    auto [it, inserted] = edge_faces.try_emplace(edge_key(a, b), std::array<int, 2>{-1, -1});
    auto& slots = it->second;
    if (slots[0] < 0) slots[0] = face_id;
    else if (slots[1] < 0) slots[1] = face_id;
    else failed = true;  // non-manifold edge, retry with larger eps
  }

  void unlink_edge(int a, int b, int face_id) {
    auto it = edge_faces.find(edge_key(a, b));
    if (it == edge_faces.end()) return;
    if (it->second[0] == face_id) it->second[0] = -1;
    if (it->second[1] == face_id) it->second[1] = -1;
    if (it->second[0] < 0 && it->second[1] < 0) edge_faces.erase(it);
  }

  int neighbor(int a, int b, int face_id) const {
    auto it = edge_faces.find(edge_key(a, b));
    if (it == edge_faces.end()) return -1;
    return it->second[0] == face_id ? it->second[1] : it->second[0];
  }

  // Returns -1 on a degenerate (near zero area) triangle.
  int add_face(int a, int b, int c) {
    Face f;
    f.v[0] = a; f.v[1] = b; f.v[2] = c;
    Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = n.norm();
    if (len < 1e-14) return -1;
    n /= len;
    double offset = n.dot(pts[a]);
    if (n.dot(interior) > offset) {  // orient away from the interior point
      n = -n;
      offset = -offset;
      std::swap(f.v[1], f.v[2]);
    }
    f.normal = n;
    f.offset = offset;
    const int id = static_cast<int>(faces.size());
    faces.push_back(std::move(f));
    link_edge(faces[id].v[0], faces[id].v[1], id);
    link_edge(faces[id].v[1], faces[id].v[2], id);
    link_edge(faces[id].v[2], faces[id].v[0], id);
    return id;
  }

  void remove_face(int id) {
    Face& f = faces[id];
    f.alive = false;
    unlink_edge(f.v[0], f.v[1], id);
    unlink_edge(f.v[1], f.v[2], id);
    unlink_edge(f.v[2], f.v[0], id);
  }

  void assign(int point, int skip_a, int skip_b, const std::vector<int>& candidates) {
    for (int id : candidates) {
      if (!faces[id].alive) continue;
      const double d = dist(faces[id], point);
      if (d > eps) {
        Face& f = faces[id];
        f.outside.push_back(point);
        if (d > f.furthest_dist) {
          f.furthest_dist = d;
          f.furthest = point;
        }
        return;
      }
    }
    (void)skip_a;
    (void)skip_b;
  }

  bool run(const std::array<int, 4>& tetra) {
    interior = (pts[tetra[0]] + pts[tetra[1]] + pts[tetra[2]] + pts[tetra[3]]) / 4.0;
    if (add_face(tetra[0], tetra[1], tetra[2]) < 0) return false;
    if (add_face(tetra[0], tetra[1], tetra[3]) < 0) return false;
    if (add_face(tetra[0], tetra[2], tetra[3]) < 0) return false;
    if (add_face(tetra[1], tetra[2], tetra[3]) < 0) return false;

    std::vector<int> initial_faces = {0, 1, 2, 3};
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      if (i == tetra[0] || i == tetra[1] || i == tetra[2] || i == tetra[3]) continue;
      assign(i, -1, -1, initial_faces);
    }

    std::vector<int> stack;
    for (int id : initial_faces)
      if (!faces[id].outside.empty()) stack.push_back(id);

    const std::size_t iter_cap = 64 + 8 * pts.size();
    std::size_t iters = 0;
    std::vector<int> visible;
    std::vector<std::array<int, 2>> horizon;
    std::vector<int> orphans;
    std::vector<int> fresh;

    while (!stack.empty()) {
      if (++iters > iter_cap || failed) return false;
      const int start = stack.back();
      stack.pop_back();
      Face& sf = faces[start];
      if (!sf.alive || sf.outside.empty()) continue;
      const int apex = sf.furthest;

      // Flood-fill the faces visible from the apex; edges to hidden faces
      // form the horizon.
      visible.clear();
      horizon.clear();
      orphans.clear();
      visible.push_back(start);
      sf.alive = false;  // temporary mark; fully removed below
      for (std::size_t k = 0; k < visible.size(); ++k) {
        const int id = visible[k];
        const Face f = faces[id];
        for (int e = 0; e < 3; ++e) {
          const int a = f.v[e], b = f.v[(e + 1) % 3];
          const int nb = neighbor(a, b, id);
          if (nb < 0) return false;
          if (!faces[nb].alive) continue;  // already in the visible set
          if (dist(faces[nb], apex) > eps) {
            faces[nb].alive = false;
            visible.push_back(nb);
          } else {
            horizon.push_back({a, b});
          }
        }
      }
      for (int id : visible) {
        faces[id].alive = true;  // restore so remove_face sees live edges
        orphans.insert(orphans.end(), faces[id].outside.begin(), faces[id].outside.end());
        remove_face(id);
      }

      fresh.clear();
      for (const auto& [a, b] : horizon) {
        const int id = add_face(a, b, apex);
        if (id < 0) return false;
        fresh.push_back(id);
      }
      if (failed) return false;

      std::sort(orphans.begin(), orphans.end());
      orphans.erase(std::unique(orphans.begin(), orphans.end()), orphans.end());
      for (int p : orphans) {
        if (p == apex) continue;
        assign(p, -1, -1, fresh);
      }
      for (int id : fresh)
        if (!faces[id].outside.empty()) stack.push_back(id);
    }
    return true;
  }
};

// Lexicographic comparison with tolerance-free exact ordering.
bool vec_less(const Vec3& a, const Vec3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

// Merges lexicographically adjacent near-duplicates; exact duplicates are
// always adjacent after the sort.
std::vector<Vec3> dedupe(const std::vector<Vec3>& points, double tol) {
  std::vector<Vec3> sorted = points;
  std::sort(sorted.begin(), sorted.end(), vec_less);
  std::vector<Vec3> out;
  out.reserve(sorted.size());
  for (const Vec3& p : sorted) {
    if (!out.empty() && (out.back() - p).cwiseAbs().maxCoeff() <= tol) continue;
    out.push_back(p);
  }
  return out;
}

ConvexPolytope degenerate_point(const Vec3& p) {
  ConvexPolytope poly;
  poly.vertices = {p};
  poly.degenerate = true;
  return poly;
}

ConvexPolytope degenerate_segment(const std::vector<Vec3>& pts, const Vec3& dir) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  Vec3 plo = pts.front(), phi = pts.front();
  for (const Vec3& p : pts) {
    const double t = dir.dot(p);
    if (t < lo) { lo = t; plo = p; }
    if (t > hi) { hi = t; phi = p; }
  }
  ConvexPolytope poly;
  poly.vertices = {plo, phi};
  std::sort(poly.vertices.begin(), poly.vertices.end(), vec_less);
  poly.degenerate = true;
  return poly;
}

// 2D hull (monotone chain) of points projected onto the plane (origin o,
// basis u/v). Returns ring-ordered 3D points.
ConvexPolytope degenerate_planar(const std::vector<Vec3>& pts, const Vec3& o,
                                 const Vec3& u, const Vec3& v) {
  struct P2 {
    double x, y;
    int id;
  };
  std::vector<P2> proj(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    proj[i] = {u.dot(pts[i] - o), v.dot(pts[i] - o), static_cast<int>(i)};
  std::sort(proj.begin(), proj.end(), [](const P2& a, const P2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  auto cross = [](const P2& o2, const P2& a, const P2& b) {
    return (a.x - o2.x) * (b.y - o2.y) - (a.y - o2.y) * (b.x - o2.x);
  };
  std::vector<P2> ring(2 * proj.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    while (k >= 2 && cross(ring[k - 2], ring[k - 1], proj[i]) <= 1e-18) --k;
    ring[k++] = proj[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = proj.size(); i-- > 0;) {
    while (k >= lower && cross(ring[k - 2], ring[k - 1], proj[i]) <= 1e-18) --k;
    ring[k++] = proj[i];
  }
  ring.resize(k > 1 ? k - 1 : k);

  ConvexPolytope poly;
  poly.degenerate = true;
  for (const P2& p : ring) poly.vertices.push_back(pts[p.id]);
  for (int i = 1; i + 1 < static_cast<int>(poly.vertices.size()); ++i)
    poly.faces.push_back({0, i, i + 1});
  return poly;
}

ConvexPolytope canonicalize(const Builder& b) {
  std::vector<int> used;
  for (const Face& f : b.faces)
    if (f.alive) used.insert(used.end(), {f.v[0], f.v[1], f.v[2]});
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  std::vector<int> order(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return vec_less(b.pts[used[i]], b.pts[used[j]]);
  });

  ConvexPolytope poly;
  std::unordered_map<int, int> remap;
  poly.vertices.reserve(used.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[used[order[i]]] = static_cast<int>(i);
    poly.vertices.push_back(b.pts[used[order[i]]]);
  }
  for (const Face& f : b.faces) {
    if (!f.alive) continue;
    std::array<int, 3> tri = {remap[f.v[0]], remap[f.v[1]], remap[f.v[2]]};
    int lo = tri[0] <= tri[1] && tri[0] <= tri[2] ? 0 : (tri[1] <= tri[2] ? 1 : 2);
    poly.faces.push_back({tri[lo], tri[(lo + 1) % 3], tri[(lo + 2) % 3]});
  }
  std::sort(poly.faces.begin(), poly.faces.end());
  return poly;
}

}  // namespace

ConvexPolytope convex_hull(const std::vector<Vec3>& points) {
  if (points.empty()) throw std::invalid_argument("convex_hull: empty input");

  const std::vector<Vec3> pts = dedupe(points, 1e-9);
  if (pts.size() == 1) return degenerate_point(pts[0]);

  Vec3 lo = pts[0], hi = pts[0];
  for (const Vec3& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max(1.0, (hi - lo).cwiseAbs().maxCoeff());

  // Farthest pair among the six axis extremes seeds the initial simplex.
  std::array<int, 6> extreme = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i < static_cast<int>(pts.size()); ++i)
    for (int a = 0; a < 3; ++a) {
      if (pts[i][a] < pts[extreme[a]][a]) extreme[a] = i;
      if (pts[i][a] > pts[extreme[3 + a]][a]) extreme[3 + a] = i;
    }
  int i0 = extreme[0], i1 = extreme[3];
  double best = -1.0;
  for (int a : extreme)
    for (int b : extreme) {
      const double d = (pts[a] - pts[b]).squaredNorm();
      if (d > best) {
        best = d;
        i0 = a;
        i1 = b;
      }
    }
  if (best <= 1e-18) return degenerate_point(pts[0]);

  const Vec3 dir = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  best = 1e-9 * scale;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const Vec3 rel = pts[i] - pts[i0];
    const double d = (rel - dir.dot(rel) * dir).norm();
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (i2 < 0) return degenerate_segment(pts, dir);

  const Vec3 normal = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = 1e-9 * scale;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double d = std::abs(normal.dot(pts[i] - pts[i0]));
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (i3 < 0) {
    const Vec3 u = dir;
    const Vec3 v = normal.cross(dir).normalized();
    return degenerate_planar(pts, pts[i0], u, v);
  }

  for (double eps = 1e-10 * scale; eps < 1e-4 * scale; eps *= 100.0) {
    Builder builder(pts, eps);
    if (builder.run({i0, i1, i2, i3})) return canonicalize(builder);
  }
  throw std::runtime_error("convex_hull: failed to build a consistent hull");
}

std::vector<Eigen::Vector4d> face_planes(const ConvexPolytope& poly) {
  if (poly.degenerate || poly.faces.empty())
    throw std::invalid_argument("face_planes: polytope has no full-dimensional faces");
  std::vector<Eigen::Vector4d> planes;
  planes.reserve(poly.faces.size());
  for (const auto& f : poly.faces) {
    const Vec3& a = poly.vertices[f[0]];
    Vec3 n = (poly.vertices[f[1]] - a).cross(poly.vertices[f[2]] - a);
    const double len = n.norm();
    if (len < 1e-15) continue;
    n /= len;
    planes.push_back({n.x(), n.y(), n.z(), n.dot(a)});
  }
  return planes;
}

double hull_plane_distance(const std::vector<Eigen::Vector4d>& planes, const Vec3& p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& pl : planes)
    worst = std::max(worst, pl.head<3>().dot(p) - pl[3]);
  return worst;
}

double hull_volume(const ConvexPolytope& poly) {
  if (poly.degenerate || poly.faces.empty()) return 0.0;
  double six_v = 0.0;
  for (const auto& f : poly.faces)
    six_v += poly.vertices[f[0]].dot(poly.vertices[f[1]].cross(poly.vertices[f[2]]));
  return std::abs(six_v) / 6.0;
}

ConvexPolytope make_box(const Vec3& center, const Vec3& size, double yaw) {
  const Mat3 r = rotation_from_angles(0.0, 0.0, yaw);
  std::vector<Vec3> corners;
  corners.reserve(8);
  for (int i = 0; i < 8; ++i) {
    const Vec3 local(((i & 1) ? 0.5 : -0.5) * size.x(),
                     ((i & 2) ? 0.5 : -0.5) * size.y(),
                     ((i & 4) ? 0.5 : -0.5) * size.z());
    corners.push_back(center + r * local);
  }
  return convex_hull(corners);
}

}  // namespace shrums
