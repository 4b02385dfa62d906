#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shrums/convex_decomposition.hpp"
#include "shrums/proximity.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <random>

using namespace shrums;
using namespace shrums::testing;

namespace {

double vertex_coverage(const TriangleMesh& mesh, const ObstacleSet& set) {
  int inside = 0;
  for (const Vec3& v : mesh.vertices) {
    ConvexPolytope probe;
    probe.vertices = {v};
    probe.degenerate = true;
    for (const ObstaclePart& part : set.parts) {
      if (signed_distance(probe, part.polytope).signed_distance <= 1e-6) {
        ++inside;
        break;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(mesh.vertices.size());
}

}  // namespace

TEST_CASE("concavity of convex fixtures is zero") {
  TriangleMesh tetra;
  tetra.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  tetra.triangles = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  tetra.normals.assign(4, Vec3::UnitX());
  CHECK(concavity(tetra) < 1e-9);

  CHECK(concavity(box_mesh({0, 0, 0}, {1, 2, 1}, 4)) < 1e-9);
}

TEST_CASE("sphere triangulation has near-zero concavity") {
  const TriangleMesh sphere = sphere_mesh(1.0, 16, 24);
  const double edge = 2.0 * kPi / 24.0;  // coarse bound on the triangulation edge
  CHECK(concavity(sphere) < 2.0 * edge);
}

TEST_CASE("notched cube concavity equals the notch depth") {
  const TriangleMesh notched = notched_cube_mesh(5);
  CHECK(concavity(notched) == doctest::Approx(0.2).epsilon(0.1));
  std::mt19937_64 rng(3);
  CHECK(sampled_concavity(notched, 12, rng) == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("L-prism concavity equals the notch-to-hull distance") {
  const TriangleMesh l_shape = l_prism_mesh(4);
  // Interior notch line sits 0.5 from the top/bottom faces, which undercuts
  // the 1/sqrt(2) diagonal distance.
  CHECK(concavity(l_shape) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("single convex box decomposes to one unflagged part") {
  const TriangleMesh box = box_mesh({0, 0, 0}, {1, 1, 1}, 3);
  DecompositionParams params;
  params.concavity_threshold = 0.05;
  const ObstacleSet set = decompose(box, params);
  REQUIRE(set.parts.size() == 1);
  CHECK(set.parts[0].concavity < 1e-9);
  CHECK_FALSE(set.parts[0].over_threshold);
  CHECK(set.parts[0].polytope.vertices.size() == 8);
}

TEST_CASE("two disjoint cubes split by connected component") {
  DecompositionParams params;
  params.concavity_threshold = 0.05;
  const ObstacleSet set = decompose(two_cubes_mesh(), params);
  REQUIRE(set.parts.size() == 2);
  CHECK(set.parts[0].polytope.centroid().x() < set.parts[1].polytope.centroid().x());
  for (const auto& part : set.parts) CHECK_FALSE(part.over_threshold);
}

TEST_CASE("L-prism splits into parts within threshold") {
  const TriangleMesh l_shape = l_prism_mesh(4);
  DecompositionParams params;
  params.concavity_threshold = 0.15;  // far below the 0.707 notch depth
  params.max_depth = 4;
  const ObstacleSet set = decompose(l_shape, params);
  REQUIRE(set.parts.size() >= 2);
  std::mt19937_64 rng(7);
  for (const auto& part : set.parts) {
    if (part.over_threshold) continue;
    CHECK(part.concavity <= params.concavity_threshold);
  }
  // At least one part must be unflagged, and coverage must hold.
  int unflagged = 0;
  for (const auto& part : set.parts) unflagged += part.over_threshold ? 0 : 1;
  CHECK(unflagged >= 1);
  CHECK(vertex_coverage(l_shape, set) >= 0.99);
}

TEST_CASE("max_depth=1 leftovers are flagged, never dropped") {
  // No single cut makes both children of the plus shape convex.
  const TriangleMesh plus = plus_prism_mesh(3);
  DecompositionParams params;
  params.concavity_threshold = 0.02;
  params.max_depth = 1;
  const ObstacleSet set = decompose(plus, params);
  REQUIRE(set.parts.size() == 2);  // exactly one split
  bool any_flagged = false;
  for (const auto& part : set.parts) any_flagged |= part.over_threshold;
  CHECK(any_flagged);
  CHECK(vertex_coverage(plus, set) >= 0.99);
}

TEST_CASE("coverage and conservativeness on the notched cube") {
  const TriangleMesh notched = notched_cube_mesh(4);
  DecompositionParams params;
  params.concavity_threshold = 0.05;
  params.max_depth = 3;
  const ObstacleSet set = decompose(notched, params);
  CHECK(vertex_coverage(notched, set) >= 0.99);
}

TEST_CASE("decreasing the threshold never decreases the part count") {
  const TriangleMesh l_shape = l_prism_mesh(3);
  DecompositionParams params;
  params.max_depth = 4;
  std::size_t previous = 0;
  for (double threshold : {0.8, 0.4, 0.2, 0.1, 0.05}) {
    params.concavity_threshold = threshold;
    const std::size_t count = decompose(l_shape, params).parts.size();
    CHECK(count >= previous);
    previous = count;
  }
}

TEST_CASE("empty mesh decomposes to an empty set") {
  CHECK(decompose(TriangleMesh{}, DecompositionParams{}).empty());
}

TEST_CASE("invalid params are rejected") {
  DecompositionParams params;
  params.concavity_threshold = 0.0;
  CHECK_THROWS_AS(decompose(TriangleMesh{}, params), std::invalid_argument);
  params.concavity_threshold = 0.1;
  params.max_depth = 0;
  CHECK_THROWS_AS(decompose(TriangleMesh{}, params), std::invalid_argument);
}

TEST_CASE("tuned preset converts the normalized threshold via the bbox diagonal") {
  const TriangleMesh box = box_mesh({0, 0, 0}, {3, 4, 0.5}, 2);
  const DecompositionParams preset = DecompositionParams::tuned_preset(box);
  Vec3 lo, hi;
  box.aabb(lo, hi);
  CHECK(preset.concavity_threshold == doctest::Approx(0.034 * (hi - lo).norm()));
  CHECK(preset.max_depth == 1);
  CHECK(preset.preprocess_resolution == 25);
  CHECK(preset.search_nodes == 10);
  CHECK(preset.search_iterations == 60);
}

TEST_CASE("deterministic output ordering") {
  const TriangleMesh l_shape = l_prism_mesh(3);
  DecompositionParams params;
  params.concavity_threshold = 0.15;
  params.max_depth = 3;
  const ObstacleSet a = decompose(l_shape, params);
  const ObstacleSet b = decompose(l_shape, params);
  REQUIRE(a.parts.size() == b.parts.size());
  for (std::size_t i = 0; i < a.parts.size(); ++i) {
    REQUIRE(a.parts[i].polytope.vertices.size() == b.parts[i].polytope.vertices.size());
    CHECK(a.parts[i].concavity == b.parts[i].concavity);
  }
}

TEST_CASE("20k-triangle mesh decomposes under 2 seconds") {
  const TriangleMesh terrain = terrain_mesh(101, 101, 12.0, 1.2);
  REQUIRE(terrain.triangles.size() == 20000);
  const DecompositionParams params = DecompositionParams::tuned_preset(terrain);
  const auto t0 = std::chrono::steady_clock::now();
  const ObstacleSet set = decompose(terrain, params);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(seconds < 2.0);
  CHECK_FALSE(set.empty());
  MESSAGE("terrain decomposition: ", seconds, " s, ", set.parts.size(), " parts");
}
