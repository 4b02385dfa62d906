#include "shrums/convex_decomposition.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace shrums {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void part_vertex_ids(const TriangleMesh& mesh, const std::vector<int>& tris,
                     std::vector<int>& ids) {
  ids.clear();
  for (int t : tris)
    for (int v : mesh.triangles[t]) ids.push_back(v);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

// Surface samples: vertices, edge midpoints, face centroids. `stride`
// subsamples triangles for cheap scoring during the plane search.
void surface_samples(const TriangleMesh& mesh, const std::vector<int>& tris,
                     int stride, std::vector<Vec3>& samples) {
  samples.clear();
  for (std::size_t k = 0; k < tris.size(); k += stride) {
    const auto& t = mesh.triangles[tris[k]];
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    samples.push_back(a);
    samples.push_back(b);
    samples.push_back(c);
    samples.push_back(0.5 * (a + b));
    samples.push_back(0.5 * (b + c));
    samples.push_back(0.5 * (c + a));
    samples.push_back((a + b + c) / 3.0);
  }
}

// Distance from interior samples to the hull boundary: for a convex body the
// nearest boundary point of an interior point lies on its nearest face plane.
double concavity_of_samples(const std::vector<Vec3>& samples, const ConvexPolytope& hull) {
  if (hull.degenerate || hull.faces.empty()) return 0.0;  // flat parts are convex
  const auto planes = face_planes(hull);
  double worst = 0.0;
  for (const Vec3& s : samples) {
    double depth = kInf;
    for (const auto& pl : planes)
      depth = std::min(depth, pl[3] - pl.head<3>().dot(s));
    if (depth > worst) worst = depth;
  }
  return std::max(0.0, worst);
}

struct PartEval {
  ConvexPolytope hull;
  double concavity = 0.0;
};

PartEval evaluate_part(const TriangleMesh& mesh, const std::vector<int>& tris,
                       int vert_stride, int tri_stride) {
  std::vector<int> ids;
  part_vertex_ids(mesh, tris, ids);
  std::vector<Vec3> verts;
  verts.reserve(ids.size() / vert_stride + 1);
  for (std::size_t i = 0; i < ids.size(); i += vert_stride)
    verts.push_back(mesh.vertices[ids[i]]);
  PartEval eval;
  eval.hull = convex_hull(verts);
  std::vector<Vec3> samples;
  surface_samples(mesh, tris, tri_stride, samples);
  eval.concavity = concavity_of_samples(samples, eval.hull);
  return eval;
}

struct CutPlane {
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;
};

void split_by_plane(const TriangleMesh& mesh, const std::vector<int>& tris,
                    const CutPlane& plane, std::vector<int>& left,
                    std::vector<int>& right) {
  left.clear();
  right.clear();
  for (int t : tris) {
    const auto& tri = mesh.triangles[t];
    const Vec3 centroid = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] +
                           mesh.vertices[tri[2]]) / 3.0;
    (plane.normal.dot(centroid) <= plane.offset ? left : right).push_back(t);
  }
}

struct Splitter {
  const TriangleMesh& mesh;
  const DecompositionParams& params;
  std::vector<ObstaclePart> out;

  // Subsampled scoring keeps the plane search affordable on large parts;
  // emitted hulls are always exact over the full vertex set.
  double score_plane(const std::vector<int>& tris, const CutPlane& plane) const {
    std::vector<int> left, right;
    split_by_plane(mesh, tris, plane, left, right);
    if (left.empty() || right.empty()) return kInf;
    const int tri_stride = std::max<std::size_t>(1, tris.size() / 400);
    const int vert_stride = std::max<std::size_t>(1, tris.size() / 900);
    const PartEval l = evaluate_part(mesh, left, vert_stride, tri_stride);
    const PartEval r = evaluate_part(mesh, right, vert_stride, tri_stride);
    return l.concavity + r.concavity;
  }

  CutPlane best_plane(const std::vector<int>& tris) const {
    std::vector<int> ids;
    part_vertex_ids(mesh, tris, ids);

    std::vector<Vec3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    // Principal axes of the part's vertex scatter.
    Vec3 mean = Vec3::Zero();
    for (int id : ids) mean += mesh.vertices[id];
    mean /= static_cast<double>(ids.size());
    Mat3 cov = Mat3::Zero();
    for (int id : ids) {
      const Vec3 d = mesh.vertices[id] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    for (int c = 0; c < 3; ++c) {
      const Vec3 axis = eig.eigenvectors().col(c);
      if (axis.cwiseAbs().maxCoeff() > 1e-9) axes.push_back(axis.normalized());
    }

    // Distribute the candidate budget round-robin over the axes, with
    // offsets at evenly spaced quantiles of the projected vertices.
    const int budget = std::max(1, params.search_nodes);
    std::vector<int> per_axis(axes.size(), 0);
    for (int i = 0; i < budget; ++i) ++per_axis[i % axes.size()];

    CutPlane best;
    double best_score = kInf;
    std::vector<double> proj(ids.size());
    for (std::size_t a = 0; a < axes.size(); ++a) {
      if (per_axis[a] == 0) continue;
      for (std::size_t i = 0; i < ids.size(); ++i)
        proj[i] = axes[a].dot(mesh.vertices[ids[i]]);
      std::sort(proj.begin(), proj.end());
      for (int j = 0; j < per_axis[a]; ++j) {
        const double q = static_cast<double>(j + 1) / (per_axis[a] + 1);
        const double offset = proj[static_cast<std::size_t>(q * (proj.size() - 1))];
        const CutPlane cand{axes[a], offset};
        const double s = score_plane(tris, cand);
        if (s < best_score) {
          best_score = s;
          best = cand;
        }
      }
    }
    if (!std::isfinite(best_score)) return best;

    // Local refinement of the winning plane's offset (axis stays fixed).
    double lo = kInf, hi = -kInf;
    for (int id : ids) {
      const double p = best.normal.dot(mesh.vertices[id]);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    double step = 0.25 * (hi - lo);
    for (int it = 0; it < params.search_iterations && step > 1e-4; ++it) {
      const double cand_offset = best.offset + ((it % 2 == 0) ? step : -step);
      const CutPlane cand{best.normal, cand_offset};
      const double s = score_plane(tris, cand);
      if (s < best_score) {
        best_score = s;
        best.offset = cand_offset;
      }
      if (it % 2 == 1) step *= 0.7;
    }
    return best;
  }

  void recurse(const std::vector<int>& tris, int depth) {
    const PartEval eval = evaluate_part(mesh, tris, 1, 1);
    if (eval.concavity <= params.concavity_threshold) {
      out.push_back({eval.hull, eval.concavity, false});
      return;
    }
    if (depth >= params.max_depth) {
      out.push_back({eval.hull, eval.concavity, true});
      return;
    }
    const CutPlane plane = best_plane(tris);
    std::vector<int> left, right;
    split_by_plane(mesh, tris, plane, left, right);
    if (left.empty() || right.empty()) {
      out.push_back({eval.hull, eval.concavity, true});  // no useful cut found
      return;
    }
    recurse(left, depth + 1);
    recurse(right, depth + 1);
  }
};

std::vector<std::vector<int>> connected_components(const TriangleMesh& mesh) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& t : mesh.triangles) {
    const int a = find(t[0]);
    parent[find(t[1])] = a;
    parent[find(t[2])] = a;
  }
  std::unordered_map<int, int> root_to_comp;
  std::vector<std::vector<int>> comps;
  for (int i = 0; i < static_cast<int>(mesh.triangles.size()); ++i) {
    const int root = find(mesh.triangles[i][0]);
    auto [it, inserted] = root_to_comp.try_emplace(root, static_cast<int>(comps.size()));
    if (inserted) comps.emplace_back();
    comps[it->second].push_back(i);
  }
  return comps;
}

TriangleMesh cluster_remesh(const TriangleMesh& mesh, int resolution) {
  Vec3 lo, hi;
  mesh.aabb(lo, hi);
  const Vec3 span = (hi - lo).cwiseMax(1e-9);
  const Vec3 cell = span / resolution;

  std::unordered_map<int64_t, int> cluster_of_cell;
  std::vector<int> vertex_cluster(mesh.vertices.size());
  TriangleMesh out;
  std::vector<Vec3> sums;
  std::vector<int> counts;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3 rel = mesh.vertices[i] - lo;
    const int64_t kx = std::min<int64_t>(resolution - 1, static_cast<int64_t>(rel.x() / cell.x()));
    const int64_t ky = std::min<int64_t>(resolution - 1, static_cast<int64_t>(rel.y() / cell.y()));
    const int64_t kz = std::min<int64_t>(resolution - 1, static_cast<int64_t>(rel.z() / cell.z()));
    const int64_t key = (kx << 42) | (ky << 21) | kz;
    auto [it, inserted] = cluster_of_cell.try_emplace(key, static_cast<int>(sums.size()));
    if (inserted) {
      sums.push_back(Vec3::Zero());
      counts.push_back(0);
    }
    vertex_cluster[i] = it->second;
    sums[it->second] += mesh.vertices[i];
    counts[it->second] += 1;
  }
  out.vertices.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) out.vertices[i] = sums[i] / counts[i];
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    std::array<int, 3> tri = {vertex_cluster[mesh.triangles[t][0]],
                              vertex_cluster[mesh.triangles[t][1]],
                              vertex_cluster[mesh.triangles[t][2]]};
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    out.triangles.push_back(tri);
    out.normals.push_back(mesh.normals.empty() ? Vec3::UnitX() : mesh.normals[t]);
  }
  return out;
}

bool centroid_less(const ObstaclePart& a, const ObstaclePart& b) {
  const Vec3 ca = a.polytope.centroid(), cb = b.polytope.centroid();
  if (ca.x() != cb.x()) return ca.x() < cb.x();
  if (ca.y() != cb.y()) return ca.y() < cb.y();
  return ca.z() < cb.z();
}

}  // namespace

void DecompositionParams::validate() const {
  if (!(concavity_threshold > 0.0))
    throw std::invalid_argument("DecompositionParams: threshold must be positive");
  if (max_depth < 1)
    throw std::invalid_argument("DecompositionParams: max_depth must be >= 1");
}

DecompositionParams DecompositionParams::tuned_preset(const TriangleMesh& mesh) {
  DecompositionParams p;
  Vec3 lo, hi;
  mesh.aabb(lo, hi);
  const double diagonal = mesh.vertices.empty() ? 1.0 : (hi - lo).norm();
  p.concavity_threshold = std::max(1e-4, 0.034 * diagonal);
  p.max_depth = 1;
  p.preprocess_resolution = 25;
  p.search_nodes = 10;
  p.search_iterations = 60;
  return p;
}

double concavity(const TriangleMesh& part) {
  if (part.triangles.empty())
    throw std::invalid_argument("concavity: empty mesh");
  std::vector<int> tris(part.triangles.size());
  std::iota(tris.begin(), tris.end(), 0);
  const PartEval eval = evaluate_part(part, tris, 1, 1);
  return eval.concavity;
}

ObstacleSet decompose(const TriangleMesh& mesh, const DecompositionParams& params) {
  params.validate();
  ObstacleSet set;
  if (mesh.triangles.empty()) return set;

  const TriangleMesh work = params.preprocess_resolution > 0
                                ? cluster_remesh(mesh, params.preprocess_resolution)
                                : mesh;
  if (work.triangles.empty()) return set;

  Splitter splitter{work, params, {}};
  for (const auto& comp : connected_components(work)) splitter.recurse(comp, 0);
  std::sort(splitter.out.begin(), splitter.out.end(), centroid_less);
  set.parts = std::move(splitter.out);
  return set;
}

}  // namespace shrums
