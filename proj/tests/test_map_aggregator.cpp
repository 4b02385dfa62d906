#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shrums/map_aggregator.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <random>

using namespace shrums;
using namespace shrums::testing;

namespace {

// Structured sensor-frame scan: two walls and a floor patch.
PointCloud structured_scan(std::mt19937_64& rng, int n) {
  PointCloud cloud;
  cloud.frame = Frame::Sensor;
  std::uniform_real_distribution<double> a(-6.0, 6.0);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double u = a(rng), v = a(rng);
    const double which = pick(rng);
    if (which < 0.4) cloud.points.emplace_back(6.0 + 0.3 * std::sin(u) * std::cos(v), u, v * 0.4);
    else if (which < 0.7) cloud.points.emplace_back(3.0 + u * 0.5, 4.0, v * 0.3);
    else cloud.points.emplace_back(4.0 + u * 0.6, v, -1.5 + 0.2 * std::cos(u));
  }
  return cloud;
}

// Deterministic wavy sheet sampled on a `spacing` grid over [-half, half]^2.
PointCloud sheet_grid(double half, double spacing) {
  PointCloud cloud;
  cloud.frame = Frame::Sensor;
  for (double u = -half; u <= half; u += spacing)
    for (double v = -half; v <= half; v += spacing)
      cloud.points.emplace_back(8.0 + std::sin(0.4 * u) + 0.3 * std::cos(v), u, 0.45 * v);
  return cloud;
}

PointCloud transformed(const PointCloud& cloud, const Pose6& pose) {
  // Scan as seen from `pose`: inverse-transform world points to sensor frame.
  PointCloud out;
  out.frame = Frame::Sensor;
  const RigidTransform t = pose_to_transform(pose);
  for (const Vec3& p : cloud.points) out.points.push_back(t.apply_inverse(p));
  return out;
}

}  // namespace

TEST_CASE("voxel grid keeps one point per voxel and finds exact neighbors") {
  VoxelGrid grid(0.1);
  CHECK(grid.insert(Vec3(0.01, 0.01, 0.01)));
  CHECK_FALSE(grid.insert(Vec3(0.02, 0.02, 0.02)));  // same voxel
  CHECK(grid.insert(Vec3(0.11, 0.0, 0.0)));
  CHECK(grid.size() == 2);

  const auto nn = grid.nearest(Vec3(0.09, 0.0, 0.0), 0.3);
  REQUIRE(nn.has_value());
  CHECK((*nn - Vec3(0.11, 0.0, 0.0)).norm() < 1e-12);
  CHECK_FALSE(grid.nearest(Vec3(5, 5, 5), 0.3).has_value());

  // Exactness against brute force on random data.
  std::mt19937_64 rng(3);
  VoxelGrid dense(0.1);
  std::vector<Vec3> stored;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p = random_in_ball(rng, 3.0);
    if (dense.insert(p)) stored.push_back(p);
  }
  for (int i = 0; i < 200; ++i) {
    const Vec3 q = random_in_ball(rng, 3.2);
    const double limit = 0.35;
    double best = limit;
    bool found = false;
    for (const Vec3& p : stored) {
      const double d = (p - q).norm();
      if (d <= best) {
        best = d;
        found = true;
      }
    }
    const auto nn = dense.nearest(q, limit);
    CHECK(nn.has_value() == found);
    if (nn && found) CHECK((*nn - q).norm() == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("first scan initializes at the prior") {
  std::mt19937_64 rng(7);
  MapAggregator agg;
  ScanFrame frame;
  frame.cloud = structured_scan(rng, 3000);
  frame.timestamp = 0.0;
  frame.prior = Pose6(1, 2, 0.5, 0, 0, 0.3);
  const RegistrationResult res = agg.register_scan(frame);
  CHECK(res.accepted);
  CHECK(res.first_frame);
  CHECK(res.estimate.x == doctest::Approx(1.0));
  CHECK(agg.frame_count() == 1);
  CHECK(agg.point_count() > 0);
  CHECK(agg.snapshot()->size() == agg.point_count());
}

TEST_CASE("known rigid offset is recovered within 1e-3") {
  std::mt19937_64 rng(11);
  const PointCloud world = structured_scan(rng, 8000);  // treat as world-frame surface
  MapAggregator agg;

  ScanFrame first;
  first.cloud = world;
  first.timestamp = 0.0;
  agg.register_scan(first);

  const Pose6 truth(0.1, 0.0, 0.0, 0, 0, 0);
  ScanFrame second;
  second.cloud = transformed(world, truth);
  second.timestamp = 0.2;
  const RegistrationResult res = agg.register_scan(second);
  CHECK(res.accepted);
  CHECK_FALSE(res.diverged);
  CHECK(res.estimate.x == doctest::Approx(0.1).epsilon(0.01));
  CHECK(std::abs(res.estimate.y) < 1e-3);
  CHECK(std::abs(res.estimate.z) < 1e-3);
  CHECK((res.estimate.translation() - truth.translation()).norm() < 1e-3);
}

TEST_CASE("registration residual beats voxel/10 on rigid pairs") {
  // Sparse enough that voxels hold one point each, so the residual after an
  // exact alignment is not dominated by voxel quantization.
  std::mt19937_64 rng(13);
  const PointCloud world = structured_scan(rng, 3000);
  MapAggregator agg;
  ScanFrame first;
  first.cloud = world;
  first.timestamp = 0.0;
  agg.register_scan(first);

  ScanFrame second;
  second.cloud = transformed(world, Pose6(0.05, -0.04, 0.02, 0, 0, 0.03));
  second.timestamp = 0.2;
  const RegistrationResult res = agg.register_scan(second);
  CHECK(res.accepted);
  CHECK(res.mean_residual < agg.config().voxel_size / 10.0);
}

TEST_CASE("uniform noise against a structured map raises the divergence flag") {
  std::mt19937_64 rng(17);
  MapAggregator agg;
  ScanFrame first;
  first.cloud = structured_scan(rng, 5000);
  first.timestamp = 0.0;
  agg.register_scan(first);
  const std::size_t before = agg.point_count();

  ScanFrame noise;
  noise.timestamp = 0.2;
  noise.cloud.frame = Frame::Sensor;
  std::uniform_real_distribution<double> big(-20.0, 20.0);
  for (int i = 0; i < 5000; ++i)
    noise.cloud.points.emplace_back(big(rng), big(rng), big(rng));
  const RegistrationResult res = agg.register_scan(noise);
  CHECK(res.diverged);
  CHECK_FALSE(res.accepted);
  CHECK(agg.point_count() == before);  // rejected scan is not merged
  CHECK(res.estimate.x == doctest::Approx(0.0));
}

TEST_CASE("merging the identical scan twice adds no points") {
  std::mt19937_64 rng(19);
  const PointCloud world = structured_scan(rng, 4000);
  MapAggregator agg;
  ScanFrame frame;
  frame.cloud = world;
  frame.timestamp = 0.0;
  agg.register_scan(frame);
  const std::size_t count = agg.point_count();

  frame.timestamp = 0.2;
  const RegistrationResult res = agg.register_scan(frame);
  CHECK(res.accepted);
  CHECK((res.estimate.translation()).norm() < 1e-6);
  CHECK(agg.point_count() == count);
}

TEST_CASE("timestamps must strictly increase") {
  std::mt19937_64 rng(23);
  MapAggregator agg;
  ScanFrame frame;
  frame.cloud = structured_scan(rng, 1000);
  frame.timestamp = 1.0;
  agg.register_scan(frame);
  frame.timestamp = 1.0;
  CHECK_THROWS_AS(agg.register_scan(frame), std::invalid_argument);
}

TEST_CASE("reset clears the map but keeps the configuration") {
  std::mt19937_64 rng(29);
  AggregatorConfig config;
  config.voxel_size = 0.2;
  MapAggregator agg(config);
  ScanFrame frame;
  frame.cloud = structured_scan(rng, 3000);
  frame.timestamp = 0.0;
  agg.register_scan(frame);
  REQUIRE(agg.point_count() > 0);

  agg.reset();
  CHECK(agg.point_count() == 0);
  CHECK(agg.frame_count() == 0);
  CHECK(agg.config().voxel_size == 0.2);
  CHECK(agg.estimate().x == 0.0);

  // Next scan re-initializes; the map equals that scan (downsampled).
  frame.timestamp = 0.1;
  const RegistrationResult res = agg.register_scan(frame);
  CHECK(res.first_frame);
  CHECK(agg.point_count() == voxel_downsample(frame.cloud, 0.2).size());
}

TEST_CASE("empty scan is skipped without state changes") {
  MapAggregator agg;
  ScanFrame frame;
  frame.timestamp = 0.0;
  const RegistrationResult res = agg.register_scan(frame);
  CHECK_FALSE(res.accepted);
  CHECK_FALSE(res.diverged);
  CHECK(agg.frame_count() == 0);
}

TEST_CASE("throughput: 20k-point scan into a 200k-point map under 200 ms") {
  MapAggregator agg;
  ScanFrame seed;
  seed.cloud = sheet_grid(40.0, 0.12);  // ~440k points, mostly one per voxel
  seed.timestamp = 0.0;
  agg.register_scan(seed);
  REQUIRE(agg.point_count() >= 200000);

  PointCloud scan = sheet_grid(8.5, 0.12);
  scan.points.resize(20000);
  const RigidTransform offset = pose_to_transform(Pose6(0.02, 0.03, -0.01, 0, 0, 0.004));
  for (Vec3& p : scan.points) p = offset.apply_inverse(p);
  ScanFrame frame;
  frame.cloud = scan;
  frame.timestamp = 0.5;

  const auto t0 = std::chrono::steady_clock::now();
  const RegistrationResult res = agg.register_scan(frame);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(res.accepted);
  CHECK(ms < 200.0);
  MESSAGE("20k scan into ", agg.point_count(), "-point map: ", ms, " ms, ",
          res.iterations, " iterations");
}
