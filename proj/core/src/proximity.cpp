#include "shrums/proximity.hpp"

#include "shrums/convex_decomposition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace shrums {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SideSupport {
  Vec3 point;
  Vec3 local;
  int tag;
};

// Polytope vertices already in the query frame.
struct FixedBody {
  const std::vector<Vec3>* verts;

  SideSupport support(const Vec3& dir) const {
    int best = 0;
    double best_dot = -kInf;
    for (int i = 0; i < static_cast<int>(verts->size()); ++i) {
      const double d = dir.dot((*verts)[i]);
      if (d > best_dot) {
        best_dot = d;
        best = i;
      }
    }
    return {(*verts)[best], (*verts)[best], 0};
  }
};

struct PlacedBody {
  const std::vector<Vec3>* verts;
  const RigidTransform* transform;

  SideSupport support(const Vec3& dir) const {
    const Vec3 local_dir = transform->rotation.transpose() * dir;
    int best = 0;
    double best_dot = -kInf;
    for (int i = 0; i < static_cast<int>(verts->size()); ++i) {
      const double d = local_dir.dot((*verts)[i]);
      if (d > best_dot) {
        best_dot = d;
        best = i;
      }
    }
    return {transform->apply((*verts)[best]), (*verts)[best], 0};
  }
};

// Support of ch(Ti*body, Tj*body): better of the two placements, tagged.
struct SweptBody {
  PlacedBody first, second;

  SideSupport support(const Vec3& dir) const {
    SideSupport a = first.support(dir);
    SideSupport b = second.support(dir);
    if (dir.dot(b.point) > dir.dot(a.point)) {
      b.tag = 1;
      return b;
    }
    return a;
  }
};

struct SupportPoint {
  Vec3 w;        // a - b in the Minkowski difference
  Vec3 pa, pb;   // witnesses on each body
  Vec3 local_a;  // body-frame vertex behind pa
  int tag_a = 0;
};

template <class A, class B>
SupportPoint minkowski_support(const A& a, const B& b, const Vec3& dir) {
  const SideSupport sa = a.support(dir);
  const SideSupport sb = b.support(-dir);
  return {sa.point - sb.point, sa.point, sb.point, sa.local, sa.tag};
}

// Barycentrics of the point on triangle abc closest to p (Ericson's region
// walk). Falls back to the best edge when the triangle degenerates.
void closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                         std::array<double, 3>& bary) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    bary = {1.0, 0.0, 0.0};
    return;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    bary = {0.0, 1.0, 0.0};
    return;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double t = (d1 - d3) != 0.0 ? d1 / (d1 - d3) : 0.0;
    bary = {1.0 - t, t, 0.0};
    return;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    bary = {0.0, 0.0, 1.0};
    return;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double t = (d2 - d6) != 0.0 ? d2 / (d2 - d6) : 0.0;
    bary = {1.0 - t, 0.0, t};
    return;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double denom = (d4 - d3) + (d5 - d6);
    const double t = denom != 0.0 ? (d4 - d3) / denom : 0.0;
    bary = {0.0, 1.0 - t, t};
    return;
  }
  const double sum = va + vb + vc;
  if (std::abs(sum) < 1e-300) {  // degenerate triangle: best of the edges
    auto edge = [&](const Vec3& u, const Vec3& v, double& t) {
      const Vec3 uv = v - u;
      const double len2 = uv.squaredNorm();
      t = len2 > 0.0 ? std::clamp((p - u).dot(uv) / len2, 0.0, 1.0) : 0.0;
      return (u + t * uv - p).squaredNorm();
    };
    double t_ab, t_ac, t_bc;
    const double e_ab = edge(a, b, t_ab), e_ac = edge(a, c, t_ac), e_bc = edge(b, c, t_bc);
    if (e_ab <= e_ac && e_ab <= e_bc) bary = {1.0 - t_ab, t_ab, 0.0};
    else if (e_ac <= e_bc) bary = {1.0 - t_ac, 0.0, t_ac};
    else bary = {0.0, 1.0 - t_bc, t_bc};
    return;
  }
  const double denom = 1.0 / sum;
  const double v = vb * denom, w = vc * denom;
  bary = {1.0 - v - w, v, w};
}

struct Simplex {
  std::array<SupportPoint, 4> pts;
  std::array<double, 4> bary = {1.0, 0.0, 0.0, 0.0};
  int count = 0;

  Vec3 closest() const {
    Vec3 v = Vec3::Zero();
    for (int i = 0; i < count; ++i) v += bary[i] * pts[i].w;
    return v;
  }

  void prune() {
    int keep = 0;
    for (int i = 0; i < count; ++i) {
      if (bary[i] > 0.0) {
        pts[keep] = pts[i];
        bary[keep] = bary[i];
        ++keep;
      }
    }
    count = keep;
    if (count == 0) count = 1;  // numerical corner: keep the last point
  }
};

// Recomputes the closest point to the origin over the simplex, reduces it to
// the supporting sub-simplex, and reports whether the origin is enclosed.
bool reduce_simplex(Simplex& s) {
  if (s.count == 1) {
    s.bary = {1.0, 0.0, 0.0, 0.0};
    return false;
  }
  if (s.count == 2) {
    const Vec3 ab = s.pts[1].w - s.pts[0].w;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp(-s.pts[0].w.dot(ab) / len2, 0.0, 1.0) : 0.0;
    s.bary = {1.0 - t, t, 0.0, 0.0};
    s.prune();
    return false;
  }
  if (s.count == 3) {
    std::array<double, 3> b3;
    closest_on_triangle(Vec3::Zero(), s.pts[0].w, s.pts[1].w, s.pts[2].w, b3);
    s.bary = {b3[0], b3[1], b3[2], 0.0};
    s.prune();
    return false;
  }

  // Tetrahedron: origin inside iff it sits on the interior side of all faces.
  static constexpr int kFaces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  bool inside = true;
  double best = kInf;
  std::array<double, 4> best_bary = {1.0, 0.0, 0.0, 0.0};
  for (int f = 0; f < 4; ++f) {
    const int i0 = kFaces[f][0], i1 = kFaces[f][1], i2 = kFaces[f][2];
    const int opp = 6 - i0 - i1 - i2;
    const Vec3& p0 = s.pts[i0].w;
    Vec3 n = (s.pts[i1].w - p0).cross(s.pts[i2].w - p0);
    const double side_origin = n.dot(-p0);
    const double side_opp = n.dot(s.pts[opp].w - p0);
    const bool outside = std::abs(side_opp) < 1e-15 || side_origin * side_opp < 0.0;
    if (!outside) continue;
    inside = false;
    std::array<double, 3> b3;
    closest_on_triangle(Vec3::Zero(), p0, s.pts[i1].w, s.pts[i2].w, b3);
    const Vec3 q = b3[0] * p0 + b3[1] * s.pts[i1].w + b3[2] * s.pts[i2].w;
    const double d2 = q.squaredNorm();
    if (d2 < best) {
      best = d2;
      best_bary = {0.0, 0.0, 0.0, 0.0};
      best_bary[i0] = b3[0];
      best_bary[i1] = b3[1];
      best_bary[i2] = b3[2];
    }
  }
  if (inside) return true;
  s.bary = best_bary;
  s.prune();
  return false;
}

struct GjkOut {
  double distance = 0.0;
  bool overlap = false;
  Simplex simplex;
};

template <class A, class B>
GjkOut gjk(const A& a, const B& b) {
  GjkOut out;
  Simplex& s = out.simplex;
  s.pts[0] = minkowski_support(a, b, Vec3(1, 0, 0));
  s.bary[0] = 1.0;
  s.count = 1;

  double scale = std::max(1.0, s.pts[0].w.norm());
  Vec3 v = s.pts[0].w;
  double dist = v.norm();

  for (int iter = 0; iter < 128; ++iter) {
    if (dist <= 1e-10 * scale) {
      out.overlap = true;
      return out;
    }
    const Vec3 dir = -v / dist;
    const SupportPoint w = minkowski_support(a, b, dir);
    scale = std::max(scale, w.w.norm());

    // The support plane bounds the distance from below; stop on no progress.
    const double lower = v.dot(w.w) / dist;
    if (dist - lower <= 1e-12 * std::max(1.0, dist)) break;
    bool duplicate = false;
    for (int i = 0; i < s.count; ++i)
      if ((s.pts[i].w - w.w).squaredNorm() <= 1e-28 * scale * scale) duplicate = true;
    if (duplicate) break;

    s.pts[s.count] = w;
    s.bary[s.count] = 0.0;
    ++s.count;
    if (reduce_simplex(s)) {
      out.overlap = true;
      return out;
    }
    v = s.closest();
    dist = v.norm();
  }
  out.distance = dist;
  if (dist <= 1e-10 * scale) out.overlap = true;
  return out;
}

// Grows a (possibly under-dimensional) GJK terminal simplex into a
// non-degenerate tetrahedron for EPA. Returns false when the Minkowski
// difference itself is flat.
template <class A, class B>
bool expand_to_tetrahedron(const A& a, const B& b, Simplex& s) {
  static const std::array<Vec3, 6> axes = {Vec3(1, 0, 0),  Vec3(-1, 0, 0), Vec3(0, 1, 0),
                                           Vec3(0, -1, 0), Vec3(0, 0, 1),  Vec3(0, 0, -1)};
  auto distinct = [&](const Vec3& w) {
    for (int i = 0; i < s.count; ++i)
      if ((s.pts[i].w - w).squaredNorm() < 1e-20) return false;
    return true;
  };

  if (s.count == 1) {
    for (const Vec3& d : axes) {
      const SupportPoint w = minkowski_support(a, b, d);
      if (distinct(w.w)) {
        s.pts[s.count++] = w;
        break;
      }
    }
    if (s.count < 2) return false;
  }
  if (s.count == 2) {
    const Vec3 seg = (s.pts[1].w - s.pts[0].w).normalized();
    Vec3 ortho = seg.cross(Vec3(1, 0, 0));
    if (ortho.squaredNorm() < 1e-8) ortho = seg.cross(Vec3(0, 1, 0));
    ortho.normalize();
    const Vec3 ortho2 = seg.cross(ortho);
    const std::array<Vec3, 4> probes = {ortho, Vec3(-ortho), ortho2, Vec3(-ortho2)};
    for (const Vec3& d : probes) {
      const SupportPoint w = minkowski_support(a, b, d);
      if (distinct(w.w) &&
          ((w.w - s.pts[0].w).cross(s.pts[1].w - s.pts[0].w)).squaredNorm() > 1e-20) {
        s.pts[s.count++] = w;
        break;
      }
    }
    if (s.count < 3) return false;
  }
  if (s.count == 3) {
    const Vec3 n =
        (s.pts[1].w - s.pts[0].w).cross(s.pts[2].w - s.pts[0].w).normalized();
    const std::array<Vec3, 2> probes = {n, Vec3(-n)};
    for (const Vec3& d : probes) {
      const SupportPoint w = minkowski_support(a, b, d);
      if (distinct(w.w) && std::abs(n.dot(w.w - s.pts[0].w)) > 1e-12) {
        s.pts[s.count++] = w;
        break;
      }
    }
    if (s.count < 4) return false;
  }
  return true;
}

struct EpaOut {
  double depth = 0.0;
  Vec3 normal = Vec3::UnitX();
  std::array<SupportPoint, 3> face;
  std::array<double, 3> bary = {1.0, 0.0, 0.0};
};

struct EpaFace {
  int v[3];
  Vec3 normal;
  double offset;
  bool alive = true;
};

// Expands the Minkowski polytope until the closest face stops moving by more
// than the face-expansion tolerance (1e-4 m).
template <class A, class B>
bool epa(const A& a, const B& b, Simplex seed, EpaOut& out) {
  constexpr double kExpandTol = 1e-4;
  std::vector<SupportPoint> pool(seed.pts.begin(), seed.pts.begin() + 4);
  const Vec3 interior =
      (pool[0].w + pool[1].w + pool[2].w + pool[3].w) / 4.0;

  std::vector<EpaFace> faces;
  auto add_face = [&](int i0, int i1, int i2) {
    EpaFace f;
    f.v[0] = i0;
    f.v[1] = i1;
    f.v[2] = i2;
    Vec3 n = (pool[i1].w - pool[i0].w).cross(pool[i2].w - pool[i0].w);
    const double len = n.norm();
    if (len < 1e-15) return false;
    n /= len;
    double offset = n.dot(pool[i0].w);
    if (n.dot(interior) > offset) {
      n = -n;
      offset = -offset;
      std::swap(f.v[1], f.v[2]);
    }
    f.normal = n;
    f.offset = offset;
    faces.push_back(f);
    return true;
  };
  if (!add_face(0, 1, 2) || !add_face(0, 1, 3) || !add_face(0, 2, 3) ||
      !add_face(1, 2, 3))
    return false;

  int best_face = -1;
  for (int iter = 0; iter < 128; ++iter) {
    best_face = -1;
    double best_offset = kInf;
    for (int i = 0; i < static_cast<int>(faces.size()); ++i) {
      if (faces[i].alive && faces[i].offset < best_offset) {
        best_offset = faces[i].offset;
        best_face = i;
      }
    }
    if (best_face < 0) return false;

    const Vec3 n = faces[best_face].normal;
    const SupportPoint w = minkowski_support(a, b, n);
    if (n.dot(w.w) - best_offset <= kExpandTol) break;

    // Remove faces visible from w; their boundary is the stitch horizon.
    const int new_vertex = static_cast<int>(pool.size());
    pool.push_back(w);
    std::vector<std::array<int, 2>> horizon;
    for (EpaFace& f : faces) {
      if (!f.alive) continue;
      if (f.normal.dot(w.w) > f.offset + 1e-12) {
        f.alive = false;
        for (int e = 0; e < 3; ++e) {
          const std::array<int, 2> edge = {f.v[e], f.v[(e + 1) % 3]};
          bool cancelled = false;
          for (auto it = horizon.begin(); it != horizon.end(); ++it) {
            if ((*it)[0] == edge[1] && (*it)[1] == edge[0]) {
              horizon.erase(it);
              cancelled = true;
              break;
            }
          }
          if (!cancelled) horizon.push_back(edge);
        }
      }
    }
    if (horizon.empty()) break;
    bool ok = true;
    for (const auto& e : horizon) ok = ok && add_face(e[0], e[1], new_vertex);
    if (!ok) break;  // degenerate stitch: settle for the current best face
  }

  if (best_face < 0) return false;
  const EpaFace& f = faces[best_face];
  out.depth = std::max(0.0, f.offset);
  out.normal = f.normal;
  const Vec3 q = f.offset * f.normal;  // origin projected onto the face plane
  closest_on_triangle(q, pool[f.v[0]].w, pool[f.v[1]].w, pool[f.v[2]].w, out.bary);
  out.face = {pool[f.v[0]], pool[f.v[1]], pool[f.v[2]]};
  return true;
}

struct QueryOut {
  double sd = 0.0;
  Vec3 pa = Vec3::Zero(), pb = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
  double mass_first = 1.0;
  Vec3 local_first = Vec3::Zero();
  Vec3 local_second = Vec3::Zero();
};

template <class Points>
void accumulate_witness(QueryOut& q, const Points& pts, const double* bary, int count) {
  q.pa = q.pb = Vec3::Zero();
  q.mass_first = 0.0;
  q.local_first = q.local_second = Vec3::Zero();
  for (int i = 0; i < count; ++i) {
    q.pa += bary[i] * pts[i].pa;
    q.pb += bary[i] * pts[i].pb;
    if (pts[i].tag_a == 0) {
      q.mass_first += bary[i];
      q.local_first += bary[i] * pts[i].local_a;
    } else {
      q.local_second += bary[i] * pts[i].local_a;
    }
  }
}

template <class A, class B>
QueryOut query(const A& a, const B& b) {
  QueryOut out;
  GjkOut g = gjk(a, b);
  if (!g.overlap) {
    out.sd = g.distance;
    accumulate_witness(out, g.simplex.pts, g.simplex.bary.data(), g.simplex.count);
    const Vec3 diff = out.pb - out.pa;
    const double len = diff.norm();
    out.axis = len > 1e-12 ? Vec3(diff / len) : Vec3::UnitX();
    return out;
  }

  if (!expand_to_tetrahedron(a, b, g.simplex)) {
    // Flat Minkowski difference: bodies touch within a lower-dimensional
    // contact; report zero depth through the current witnesses.
    out.sd = 0.0;
    accumulate_witness(out, g.simplex.pts, g.simplex.bary.data(), g.simplex.count);
    return out;
  }
  EpaOut e;
  if (!epa(a, b, g.simplex, e)) {
    out.sd = 0.0;
    accumulate_witness(out, g.simplex.pts, g.simplex.bary.data(), g.simplex.count);
    return out;
  }
  out.sd = -e.depth;
  out.axis = e.normal;
  accumulate_witness(out, e.face, e.bary.data(), 3);
  return out;
}

// Content ordering that makes signed_distance(a, b) bit-symmetric: the query
// always runs on the canonically ordered pair.
int polytope_compare(const ConvexPolytope& a, const ConvexPolytope& b) {
  if (a.vertices.size() != b.vertices.size())
    return a.vertices.size() < b.vertices.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.vertices.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      if (a.vertices[i][c] < b.vertices[i][c]) return -1;
      if (a.vertices[i][c] > b.vertices[i][c]) return 1;
    }
  return 0;
}

}  // namespace

ProximityResult signed_distance(const ConvexPolytope& a, const ConvexPolytope& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("signed_distance: empty polytope");
  if (polytope_compare(a, b) > 0) {
    ProximityResult r = signed_distance(b, a);
    std::swap(r.witness_a, r.witness_b);
    r.axis = -r.axis;
    return r;
  }
  const FixedBody body_a{&a.vertices};
  const FixedBody body_b{&b.vertices};
  const QueryOut q = query(body_a, body_b);
  ProximityResult r;
  r.signed_distance = q.sd;
  r.witness_a = q.pa;
  r.witness_b = q.pb;
  r.axis = q.axis;
  return r;
}

SweptContact swept_signed_distance(const ConvexPolytope& robot,
                                   const RigidTransform& placement_i,
                                   const RigidTransform& placement_j,
                                   const ConvexPolytope& obstacle) {
  if (robot.empty() || obstacle.empty())
    throw std::invalid_argument("swept_signed_distance: empty polytope");
  const SweptBody swept{{&robot.vertices, &placement_i}, {&robot.vertices, &placement_j}};
  const FixedBody obs{&obstacle.vertices};
  const QueryOut q = query(swept, obs);
  SweptContact c;
  c.signed_distance = q.sd;
  c.axis = q.axis;
  c.witness_robot = q.pa;
  c.witness_obstacle = q.pb;
  c.mass_first = q.mass_first;
  c.local_first = q.local_first;
  c.local_second = q.local_second;
  return c;
}

ConvexPolytope swept_hull(const ConvexPolytope& robot, const Pose6& si, const Pose6& sj) {
  const RigidTransform ti = pose_to_transform(si);
  const RigidTransform tj = pose_to_transform(sj);
  std::vector<Vec3> pts;
  pts.reserve(2 * robot.vertices.size());
  for (const Vec3& v : robot.vertices) pts.push_back(ti.apply(v));
  for (const Vec3& v : robot.vertices) pts.push_back(tj.apply(v));
  return convex_hull(pts);
}

double aabb_signed_distance(const Vec3& lo_a, const Vec3& hi_a,
                            const Vec3& lo_b, const Vec3& hi_b) {
  Vec3 gap;
  double worst_overlap = -kInf;
  bool separated = false;
  for (int c = 0; c < 3; ++c) {
    gap[c] = std::max(lo_a[c] - hi_b[c], lo_b[c] - hi_a[c]);
    if (gap[c] > 0.0) separated = true;
    worst_overlap = std::max(worst_overlap, gap[c]);
  }
  if (!separated) return worst_overlap;
  double sum = 0.0;
  for (int c = 0; c < 3; ++c)
    if (gap[c] > 0.0) sum += gap[c] * gap[c];
  return std::sqrt(sum);
}

ClearanceReport min_clearance(const ConvexPolytope& robot,
                              const std::vector<Pose6>& path,
                              const ObstacleSet& obstacles) {
  if (path.size() < 2)
    throw std::invalid_argument("min_clearance: path needs at least 2 states");
  ClearanceReport report;
  report.min_clearance = kInf;
  if (obstacles.parts.empty()) return report;

  for (int i = 0; i + 1 < static_cast<int>(path.size()); ++i) {
    const ConvexPolytope hull = swept_hull(robot, path[i], path[i + 1]);
    Vec3 lo, hi;
    hull.aabb(lo, hi);
    for (int o = 0; o < static_cast<int>(obstacles.parts.size()); ++o) {
      const ConvexPolytope& obs = obstacles.parts[o].polytope;
      Vec3 olo, ohi;
      obs.aabb(olo, ohi);
      if (aabb_signed_distance(lo, hi, olo, ohi) >= report.min_clearance) continue;
      const double sd = signed_distance(hull, obs).signed_distance;
      if (sd < report.min_clearance) {
        report.min_clearance = sd;
        report.worst_segment = i;
        report.worst_obstacle = o;
      }
    }
  }
  return report;
}

}  // namespace shrums
