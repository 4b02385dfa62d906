#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shrums/depth_image.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>

using namespace shrums;
using namespace shrums::testing;

namespace {

SensorModel small_model() {
  SensorModel m;
  m.width_px = 100;
  m.height_px = 50;
  m.hfov = deg_to_rad(90.0);
  m.vfov = deg_to_rad(90.0);
  m.d_min = 0.5;
  m.d_max = 15.0;
  return m;
}

SensorModel random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> px(8, 48);
  std::uniform_real_distribution<double> fov(deg_to_rad(30.0), deg_to_rad(150.0));
  std::uniform_real_distribution<double> dmin(0.0, 1.0);
  std::uniform_real_distribution<double> dspan(4.0, 14.0);
  SensorModel m;
  m.width_px = px(rng);
  m.height_px = px(rng);
  m.hfov = fov(rng);
  m.vfov = fov(rng);
  m.d_min = dmin(rng);
  m.d_max = m.d_min + dspan(rng);
  return m;
}

}  // namespace

TEST_CASE("project_point basics") {
  const Intrinsics k{50.0, 25.0, 50.0, 25.0};

  const auto center = project_point(Vec3(5, 0, 0), k);
  REQUIRE(center.has_value());
  CHECK(center->u == doctest::Approx(k.cx));
  CHECK(center->v == doctest::Approx(k.cy));

  // 45 degrees left lands exactly on the left edge for a 90 degree HFOV.
  const auto edge = project_point(Vec3(5, 5, 0), k);
  REQUIRE(edge.has_value());
  CHECK(edge->u == doctest::Approx(0.0));
  CHECK(edge->v == doctest::Approx(k.cy));

  CHECK_FALSE(project_point(Vec3(-1, 0, 0), k).has_value());
  CHECK_FALSE(project_point(Vec3(0, 0, 0), k).has_value());
  // Just past the left edge: outside [0, W).
  CHECK_FALSE(project_point(Vec3(5, 5.01, 0), k).has_value());
}

TEST_CASE("render takes the per-pixel minimum and applies the range gate") {
  const SensorModel m = small_model();
  PointCloud map;
  map.points.emplace_back(3.0, 0.0, 0.0);
  map.points.emplace_back(4.0, 0.0, 0.0);  // same pixel, farther
  const DepthImage img = render(map, m, Pose6{});
  const Intrinsics k = intrinsics_from_sensor(m);
  const int cu = static_cast<int>(k.cx), cv = static_cast<int>(k.cy);
  CHECK(img.at(cu, cv) == 3.0);

  PointCloud far_map;
  far_map.points.emplace_back(20.0, 0.0, 0.0);  // beyond d_max = 15
  const DepthImage gated = render(far_map, m, Pose6{});
  CHECK(gated.defined_count() == 0);

  PointCloud near_map;
  near_map.points.emplace_back(0.25, 0.0, 0.0);  // inside d_min = 0.5
  CHECK(render(near_map, m, Pose6{}).defined_count() == 0);
}

TEST_CASE("empty map renders an all-undefined flagged image") {
  const DepthImage img = render(PointCloud{}, small_model(), Pose6{});
  CHECK(img.rendered_from_empty_map);
  CHECK(img.defined_count() == 0);
}

TEST_CASE("render equals the exhaustive per-pixel oracle") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 8; ++trial) {
    const SensorModel m = random_model(rng);
    const Pose6 pose = random_pose(rng, 2.0, 0.8);
    PointCloud map;
    const int count = 2000 + 800 * trial;
    for (int i = 0; i < count; ++i)
      map.points.push_back(random_in_ball(rng, 12.0) + Vec3(6, 0, 0));
    const DepthImage got = render(map, m, pose);
    const DepthImage want = render_oracle(map, m, pose);
    REQUIRE(got.cells.size() == want.cells.size());
    for (std::size_t i = 0; i < got.cells.size(); ++i) {
      if (std::isfinite(want.cells[i])) {
        CHECK(got.cells[i] == want.cells[i]);  // cell-exact
      } else {
        CHECK_FALSE(std::isfinite(got.cells[i]));
      }
    }
  }
}

TEST_CASE("occlusion monotonicity: more points never increase a defined cell") {
  std::mt19937_64 rng(55);
  const SensorModel m = random_model(rng);
  PointCloud map;
  for (int i = 0; i < 3000; ++i)
    map.points.push_back(random_in_ball(rng, 8.0) + Vec3(5, 0, 0));
  const DepthImage base = render(map, m, Pose6{});
  for (int i = 0; i < 3000; ++i)
    map.points.push_back(random_in_ball(rng, 8.0) + Vec3(5, 0, 0));
  const DepthImage more = render(map, m, Pose6{});
  for (int v = 0; v < base.height; ++v)
    for (int u = 0; u < base.width; ++u)
      if (base.defined(u, v)) {
        REQUIRE(more.defined(u, v));
        CHECK(more.at(u, v) <= base.at(u, v));
      }
}

TEST_CASE("render containment: every defined value is a projected point's range") {
  std::mt19937_64 rng(77);
  const SensorModel m = random_model(rng);
  const Pose6 pose = random_pose(rng, 1.0, 0.5);
  PointCloud map;
  for (int i = 0; i < 2000; ++i)
    map.points.push_back(random_in_ball(rng, 6.0) + Vec3(4, 0, 0));
  const DepthImage img = render(map, m, pose);
  const Intrinsics k = intrinsics_from_sensor(m);
  const RigidTransform t = pose_to_transform(pose);
  int checked = 0;
  for (const Vec3& pw : map.points) {
    const Vec3 p = t.apply_inverse(pw);
    const auto uv = project_point(p, k);
    if (!uv || p.x() < m.d_min || p.x() > m.d_max) continue;
    const int u = static_cast<int>(std::floor(uv->u));
    const int v = static_cast<int>(std::floor(uv->v));
    REQUIRE(img.defined(u, v));
    CHECK(img.at(u, v) <= p.x());  // stored value comes from some binned point
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("median_fill") {
  SensorModel m;
  m.width_px = 3;
  m.height_px = 3;
  m.hfov = deg_to_rad(60.0);
  m.vfov = deg_to_rad(60.0);
  m.d_max = 20.0;

  SUBCASE("constant neighborhood fills the hole") {
    DepthImage img = DepthImage::undefined(m, Pose6{});
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 3; ++u)
        if (u != 1 || v != 1) img.at(u, v) = 2.0;
    const DepthImage filled = median_fill(img, 3);
    CHECK(filled.at(1, 1) == doctest::Approx(2.0));
  }

  SUBCASE("fully defined image is unchanged") {
    DepthImage img = DepthImage::undefined(m, Pose6{});
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 3; ++u) img.at(u, v) = 1.0 + u + 3 * v;
    const DepthImage filled = median_fill(img, 3);
    for (std::size_t i = 0; i < img.cells.size(); ++i)
      CHECK(filled.cells[i] == img.cells[i]);
  }

  SUBCASE("even-count median is the mean of the middle two") {
    DepthImage img = DepthImage::undefined(m, Pose6{});
    const double vals[8] = {1, 1, 1, 1, 9, 9, 9, 9};
    int i = 0;
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 3; ++u)
        if (u != 1 || v != 1) img.at(u, v) = vals[i++];
    const DepthImage filled = median_fill(img, 3);
    CHECK(filled.at(1, 1) == doctest::Approx(5.0));
  }

  SUBCASE("insufficient support leaves the hole") {
    DepthImage img = DepthImage::undefined(m, Pose6{});
    img.at(0, 0) = 3.0;
    img.at(2, 2) = 4.0;
    const DepthImage filled = median_fill(img, 3);  // only 2 neighbors < k=3
    CHECK_FALSE(filled.defined(1, 1));
  }

  SUBCASE("filled values stay inside the window min/max") {
    std::mt19937_64 rng(13);
    SensorModel big;
    big.width_px = 32;
    big.height_px = 24;
    big.hfov = deg_to_rad(80.0);
    big.vfov = deg_to_rad(60.0);
    big.d_max = 20.0;
    DepthImage img = DepthImage::undefined(big, Pose6{});
    std::uniform_real_distribution<double> range(1.0, 14.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (double& c : img.cells)
      if (coin(rng) < 0.6) c = range(rng);
    const DepthImage filled = median_fill(img, 5);
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < img.width; ++u) {
        if (img.defined(u, v)) {
          CHECK(filled.at(u, v) == img.at(u, v));  // never touches defined cells
          continue;
        }
        if (!filled.defined(u, v)) continue;
        double lo = 1e18, hi = -1e18;
        for (int dv = -2; dv <= 2; ++dv)
          for (int du = -2; du <= 2; ++du) {
            const int uu = u + du, vv = v + dv;
            if (uu < 0 || uu >= img.width || vv < 0 || vv >= img.height) continue;
            if (!img.defined(uu, vv)) continue;
            lo = std::min(lo, img.at(uu, vv));
            hi = std::max(hi, img.at(uu, vv));
          }
        CHECK(filled.at(u, v) >= lo);
        CHECK(filled.at(u, v) <= hi);
      }
  }

  SUBCASE("window validation") {
    DepthImage img = DepthImage::undefined(m, Pose6{});
    CHECK_THROWS_AS(median_fill(img, 4), std::invalid_argument);
    CHECK_THROWS_AS(median_fill(img, 7), std::invalid_argument);
  }
}

TEST_CASE("wide-FOV rig tiles the span with tangent non-overlapping views") {
  const SensorModel base = preset_c2();
  const double total = deg_to_rad(240.0);
  const auto rig = wide_fov_rig(base, total);
  REQUIRE(rig.size() >= 2);
  double sum = 0.0;
  for (const auto& m : rig) {
    CHECK(m.hfov < kPi);
    sum += m.hfov;
  }
  CHECK(sum == doctest::Approx(total));

  // A bundle of rays across the span must land in exactly one sub-sensor.
  PointCloud one_point;
  for (double angle = -total / 2 + 0.01; angle < total / 2; angle += 0.05) {
    one_point.points = {Vec3(5.0 * std::cos(angle), 5.0 * std::sin(angle), 0.0)};
    int hits = 0;
    for (const auto& m : rig) {
      const DepthImage img = render(one_point, m, m.mount);
      hits += img.defined_count();
    }
    CHECK(hits == 1);
  }
}
