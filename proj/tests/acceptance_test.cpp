// Acceptance suite: every criterion prints one [ACCEPTANCE] line so the run
// can be audited from the log alone.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shrums/convex_decomposition.hpp"
#include "shrums/depth_image.hpp"
#include "shrums/depth_mesh.hpp"
#include "shrums/navigator.hpp"
#include "shrums/proximity.hpp"
#include "shrums/trajectory_optimizer.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

using namespace shrums;
using namespace shrums::testing;

namespace {

struct Criterion {
  const char* id;
  const char* label;
  bool ok = true;

  void check(bool condition) {
    ok = ok && condition;
    CHECK(condition);
  }
  ~Criterion() {
    std::printf("[ACCEPTANCE] %s %s - %s\n", id, ok ? "PASS" : "FAIL", label);
    std::fflush(stdout);
  }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double time_call(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SensorModel random_small_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(12, 48), h(8, 24);
  std::uniform_real_distribution<double> fov(deg_to_rad(35.0), deg_to_rad(140.0));
  std::uniform_real_distribution<double> dmin(0.0, 0.8);
  std::uniform_real_distribution<double> span(5.0, 13.0);
  SensorModel m;
  m.width_px = w(rng);
  m.height_px = h(rng);
  m.hfov = fov(rng);
  m.vfov = fov(rng);
  m.d_min = dmin(rng);
  m.d_max = m.d_min + span(rng);
  return m;
}

DepthImage random_depth_image(const SensorModel& m, std::mt19937_64& rng, double fill) {
  DepthImage img = DepthImage::undefined(m, random_pose(rng, 2.0, 0.6));
  std::uniform_real_distribution<double> range(m.d_min + 1e-3, m.d_max - 1e-3);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (double& c : img.cells)
    if (coin(rng) < fill) c = range(rng);
  return img;
}

DepthImage constant_full_image(int w, int h, double range) {
  SensorModel m = preset_c2();
  m.width_px = w;
  m.height_px = h;
  DepthImage img = DepthImage::undefined(m, Pose6{});
  for (double& c : img.cells) c = range;
  return img;
}

MissionReport run_scene_mission(const Scene& scene, const std::vector<GoalSpec>& goals,
                                const SensorModel& virtual_sensor,
                                std::optional<double> reset_at = std::nullopt) {
  MissionSpec spec;
  spec.name = scene.name;
  spec.goals = goals;
  spec.virtual_sensor = virtual_sensor;
  spec.timeout_s = 900.0;
  spec.sim_speedup = 8.0;
  spec.save_artifacts = false;
  spec.reset_at_s = reset_at;
  SyntheticScanSource source(scene, spec.scan_sensor, spec.scan_rate_hz, 0.08);
  return run_mission(spec, source, &scene);
}

}  // namespace

TEST_CASE("C1 rendering oracle equivalence") {
  Criterion c{"C01", "render is cell-exact vs exhaustive per-pixel oracle, < 1 s total"};
  std::mt19937_64 rng(2024);
  double render_seconds = 0.0;
  std::uniform_int_distribution<int> count(1000, 10000);
  for (int trial = 0; trial < 50; ++trial) {
    const SensorModel m = random_small_model(rng);
    const Pose6 pose = random_pose(rng, 2.0, 0.7);
    PointCloud map;
    const int n = count(rng);
    for (int i = 0; i < n; ++i)
      map.points.push_back(random_in_ball(rng, 10.0) + Vec3(5, 0, 0));

    DepthImage got;
    render_seconds += time_call([&] { got = render(map, m, pose); });
    const DepthImage want = render_oracle(map, m, pose);
    bool equal = got.cells.size() == want.cells.size();
    for (std::size_t i = 0; equal && i < got.cells.size(); ++i) {
      const bool gd = std::isfinite(got.cells[i]), wd = std::isfinite(want.cells[i]);
      equal = (gd == wd) && (!gd || got.cells[i] == want.cells[i]);
    }
    c.check(equal);
  }
  c.check(render_seconds < 1.0);
  MESSAGE("render total: ", render_seconds, " s over 50 clouds");
}

TEST_CASE("C2 projection round trip") {
  Criterion c{"C02", "project(unproject) is identity on pixels; re-render within 1e-6"};
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 20; ++trial) {
    const SensorModel m = random_small_model(rng);
    const DepthImage img = random_depth_image(m, rng, 0.65);
    const UnprojectResult un = unproject(img);
    const Intrinsics k = intrinsics_from_sensor(m);
    const RigidTransform t = pose_to_transform(img.pose);

    bool pixels_ok = true;
    for (int v = 0; v < img.height && pixels_ok; ++v)
      for (int u = 0; u < img.width && pixels_ok; ++u) {
        const int id = un.vertex_of_pixel[static_cast<std::size_t>(v) * img.width + u];
        if (id < 0) continue;
        const auto uv = project_point(t.apply_inverse(un.cloud.points[id]), k);
        pixels_ok = uv && static_cast<int>(std::floor(uv->u)) == u &&
                    static_cast<int>(std::floor(uv->v)) == v;
      }
    c.check(pixels_ok);

    const DepthImage again = render(un.cloud, m, img.pose);
    bool cells_ok = true;
    for (std::size_t i = 0; i < img.cells.size() && cells_ok; ++i) {
      const bool od = std::isfinite(img.cells[i]), nd = std::isfinite(again.cells[i]);
      cells_ok = (od == nd) && (!od || std::abs(img.cells[i] - again.cells[i]) <= 1e-6);
    }
    c.check(cells_ok);
  }
}

TEST_CASE("C3 sensor-simulation timing") {
  Criterion c{"C03", "200k-point map renders into 200x50 in < 50 ms median"};
  std::mt19937_64 rng(77);
  PointCloud map;
  while (map.points.size() < 200000)
    map.points.push_back(random_in_ball(rng, 12.0) + Vec3(7, 0, 0));
  const SensorModel m = preset_c2();
  std::vector<double> times;
  DepthImage img;
  for (int run = 0; run < 9; ++run)
    times.push_back(time_call([&] { img = render(map, m, Pose6{}); }));
  const double med = median(times);
  c.check(med < 0.050);
  c.check(img.defined_count() > 0);
  MESSAGE("render median: ", med * 1e3, " ms");
}

TEST_CASE("C4 meshing count, timing and linear scaling") {
  Criterion c{"C04", "triangulate: exact count, < 100 ms median, linear in pixels (+/-20%)"};
  const DepthImage full = constant_full_image(200, 50, 5.0);
  TriangleMesh mesh = triangulate(full);
  c.check(mesh.triangles.size() == 2u * 199u * 49u);

  std::vector<double> times;
  for (int run = 0; run < 15; ++run)
    times.push_back(time_call([&] { mesh = triangulate(full); }));
  c.check(median(times) < 0.100);

  // Random 80%-filled images at 1x, 4x and 16x pixel counts.
  std::mt19937_64 rng(99);
  auto timed_at = [&](int w, int h) {
    SensorModel m = preset_c2();
    m.width_px = w;
    m.height_px = h;
    const DepthImage img = random_depth_image(m, rng, 0.8);
    std::vector<double> samples;
    for (int run = 0; run < 31; ++run) {
      TriangleMesh out;
      samples.push_back(time_call([&] { out = triangulate(img); }));
    }
    return median(samples);
  };
  const double t1 = timed_at(100, 25);
  const double t4 = timed_at(200, 50);
  const double t16 = timed_at(400, 100);
  const double r1 = t4 / t1, r2 = t16 / t4;
  c.check(r1 >= 4.0 * 0.8);
  c.check(r1 <= 4.0 * 1.2);
  c.check(r2 >= 4.0 * 0.8);
  c.check(r2 <= 4.0 * 1.2);
  MESSAGE("triangulate medians: ", t1 * 1e3, " / ", t4 * 1e3, " / ", t16 * 1e3,
          " ms; ratios ", r1, ", ", r2);
}

TEST_CASE("C5 decomposition fixtures") {
  Criterion c{"C05", "decomposition: parts within threshold, coverage >= 99%, 20k tris < 2 s"};

  auto coverage = [](const TriangleMesh& mesh, const ObstacleSet& set) {
    int inside = 0;
    for (const Vec3& v : mesh.vertices) {
      ConvexPolytope probe;
      probe.vertices = {v};
      probe.degenerate = true;
      for (const ObstaclePart& part : set.parts)
        if (signed_distance(probe, part.polytope).signed_distance <= 1e-6) {
          ++inside;
          break;
        }
    }
    return static_cast<double>(inside) / static_cast<double>(mesh.vertices.size());
  };

  struct Fixture {
    TriangleMesh mesh;
    double threshold;
    int depth;
  };
  const std::vector<Fixture> fixtures = {
      {l_prism_mesh(4), 0.15, 4},
      {two_cubes_mesh(), 0.05, 2},
      {notched_cube_mesh(4), 0.05, 3},
  };
  for (const Fixture& fx : fixtures) {
    DecompositionParams params;
    params.concavity_threshold = fx.threshold;
    params.max_depth = fx.depth;
    const ObstacleSet set = decompose(fx.mesh, params);
    c.check(!set.empty());
    for (const ObstaclePart& part : set.parts)
      if (!part.over_threshold) c.check(part.concavity <= fx.threshold + 1e-12);
    c.check(coverage(fx.mesh, set) >= 0.99);
  }

  // The implementation's concavity metric agrees with an independent
  // random-sampling oracle on the notched fixture.
  std::mt19937_64 rng(5);
  const TriangleMesh notched = notched_cube_mesh(5);
  const double impl_concavity = concavity(notched);
  const double oracle_concavity = sampled_concavity(notched, 16, rng);
  c.check(std::abs(impl_concavity - oracle_concavity) < 0.02);
  c.check(std::abs(impl_concavity - 0.2) < 0.02);

  const TriangleMesh terrain = terrain_mesh(101, 101, 12.0, 1.2);
  REQUIRE(terrain.triangles.size() == 20000);
  ObstacleSet big;
  const double seconds =
      time_call([&] { big = decompose(terrain, DecompositionParams::tuned_preset(terrain)); });
  c.check(seconds < 2.0);
  c.check(!big.empty());
  MESSAGE("20k-triangle decomposition: ", seconds, " s");
}

TEST_CASE("C6 signed distance vs oracles") {
  Criterion c{"C06", "sd within 1e-3 of support oracle, sign matches LP, closed forms exact"};
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const ConvexPolytope a = random_polytope(rng, 4 + trial % 17, 0.8, Vec3::Zero());
    const ConvexPolytope b =
        random_polytope(rng, 4 + (trial * 5) % 17, 0.8, random_in_ball(rng, 2.2));
    const double sd = signed_distance(a, b).signed_distance;
    c.check(std::abs(sd - support_sampling_signed_distance(a, b, 20000)) <= 1e-3);
    c.check(lp_overlap(a, b) == (sd <= 1e-9));
  }
  const ConvexPolytope cube_a = make_box({0, 0, 0}, {1, 1, 1});
  const ConvexPolytope cube_b = make_box({1.5, 0, 0}, {1, 1, 1});
  c.check(std::abs(signed_distance(cube_a, cube_b).signed_distance - 0.5) <= 1e-6);
  c.check(std::abs(signed_distance(cube_a, cube_a).signed_distance + 1.0) <= 1e-4);
}

TEST_CASE("C7 planner analytic case") {
  Criterion c{"C07", "empty scene, goal 30 m, H=10: collinear, |s_n-s_1|=10, J=10+20w"};
  const PlannerConfig cfg;
  const PathSolution sol =
      plan(Pose6{}, Pose6(30, 0, 0, 0, 0, 0), ObstacleSet{}, default_robot_body(), cfg);
  c.check(sol.feasible);
  c.check(sol.states.size() == 11);
  for (const Pose6& s : sol.states) {
    c.check(std::abs(s.y) <= 1e-3);
    c.check(std::abs(s.z) <= 1e-3);
  }
  const double span = sol.states.back().translation().norm();
  c.check(std::abs(span - 10.0) <= 1e-3);
  c.check(std::abs(sol.objective - (10.0 + 20.0 * cfg.goal_weight)) <= 1e-3);
}

TEST_CASE("C8 certificate soundness on randomized scenes") {
  Criterion c{"C08", "every feasible-flagged plan passes min_clearance >= d_safe - 1e-3"};
  std::mt19937_64 rng(4242);
  const PlannerConfig cfg;
  const ConvexPolytope robot = default_robot_body();
  int feasible_count = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> n_obs(1, 6);
    std::uniform_real_distribution<double> along(2.5, 9.5);
    std::uniform_real_distribution<double> lateral(-2.0, 2.0);
    ObstacleSet obstacles;
    const int count = n_obs(rng);
    for (int o = 0; o < count; ++o)
      obstacles.parts.push_back(
          {random_polytope(rng, 4 + (trial + o) % 14, 0.8,
                           Vec3(along(rng), lateral(rng), lateral(rng))),
           0.0, false});
    const PathSolution sol =
        plan(Pose6{}, Pose6(30, 0, 0, 0, 0, 0), obstacles, robot, cfg);
    if (!sol.feasible) continue;
    ++feasible_count;
    const ClearanceReport cert = min_clearance(robot, sol.states, obstacles);
    c.check(cert.min_clearance >= cfg.d_safe - 1e-3);  // zero tolerance on soundness
  }
  c.check(feasible_count >= 12);
  MESSAGE(feasible_count, " of 20 scenes solved feasibly");
}

TEST_CASE("C9 planner timing") {
  Criterion c{"C09", "median plan wall time < 1 s on scenes with <= 40 polytopes"};
  std::mt19937_64 rng(555);
  const PlannerConfig cfg;
  const ConvexPolytope robot = default_robot_body();
  std::vector<double> times;
  for (int trial = 0; trial < 7; ++trial) {
    ObstacleSet obstacles;
    std::uniform_real_distribution<double> along(2.5, 11.0);
    std::uniform_real_distribution<double> lateral(-3.0, 3.0);
    while (obstacles.parts.size() < 40) {
      const Vec3 center(along(rng), lateral(rng), lateral(rng));
      if (center.head<2>().norm() < 1.2) continue;  // keep the start free
      obstacles.parts.push_back({random_polytope(rng, 10, 0.5, center), 0.0, false});
    }
    const PathSolution sol =
        plan(Pose6{}, Pose6(30, 0, 0, 0, 0, 0), obstacles, robot, cfg);
    times.push_back(sol.wall_time_s);
  }
  const double med = median(times);
  c.check(med < 1.0);
  MESSAGE("plan median: ", med, " s over ", times.size(), " scenes");
}

TEST_CASE("C10 end-to-end missions") {
  Criterion c{"C10", "container/scatter/pillars missions complete with zero collisions"};

  const MissionReport container = run_scene_mission(
      scene_container(), {{Pose6(20, 0, 0, 0, 0, 0), 1.0}}, preset_c2());
  c.check(container.completed);
  c.check(container.executed_min_clearance >= 0.0);
  c.check(container.wall_duration_s < 300.0);
  MESSAGE("container: ", container.wall_duration_s, " s wall, clearance ",
          container.executed_min_clearance);

  const MissionReport scatter = run_scene_mission(
      scene_scatter(), {{Pose6(20, 0, 0, 0, 0, 0), 1.0}}, preset_c2());
  c.check(scatter.completed);
  c.check(scatter.executed_min_clearance >= 0.0);
  c.check(scatter.wall_duration_s < 300.0);
  MESSAGE("scatter: ", scatter.wall_duration_s, " s wall, clearance ",
          scatter.executed_min_clearance);

  const MissionReport pillars = run_scene_mission(
      scene_pillars(),
      {{Pose6(8.5, 0, 0, 0, 0, 0), 1.0},
       {Pose6(11.5, -1.5, 0, 0, 0, 0), 1.0},
       {Pose6(14.5, 1.5, 0, 0, 0, 0), 1.0},
       {Pose6(19, 0, 0, 0, 0, 0), 1.0}},
      preset_c3());
  c.check(pillars.completed);
  c.check(pillars.goals_reached == 4);
  c.check(pillars.executed_min_clearance >= 0.0);
  c.check(pillars.wall_duration_s < 300.0);
  MESSAGE("pillars: ", pillars.wall_duration_s, " s wall, clearance ",
          pillars.executed_min_clearance);
}

TEST_CASE("C11 warm-start benefit") {
  Criterion c{"C11", "median outer iterations: PREVIOUS <= LINEAR over 10 paired runs"};
  std::mt19937_64 rng(808);
  const PlannerConfig cfg;
  const ConvexPolytope robot = default_robot_body();
  std::vector<double> warm_iters, cold_iters;
  int attempts = 0;
  while (warm_iters.size() < 10 && attempts < 30) {
    ++attempts;
    std::uniform_real_distribution<double> lateral(-1.2, 1.2);
    ObstacleSet obstacles;
    obstacles.parts.push_back({make_box({5, lateral(rng), 0}, {1, 1, 1}), 0.0, false});
    obstacles.parts.push_back(
        {make_box({8, lateral(rng), lateral(rng)}, {1, 1, 1}), 0.0, false});
    const Pose6 goal(30, 0, 0, 0, 0, 0);
    const PathSolution first = plan(Pose6{}, goal, obstacles, robot, cfg);
    if (!first.feasible) continue;
    const Pose6 advanced = first.states[1];
    const auto warm = warm_start(&first, advanced, goal, cfg, WarmStartMode::Previous);
    const PathSolution ws = plan(advanced, goal, obstacles, robot, cfg, &warm);
    const auto cold = warm_start(nullptr, advanced, goal, cfg, WarmStartMode::Linear);
    const PathSolution cs = plan(advanced, goal, obstacles, robot, cfg, &cold);
    if (!ws.feasible || !cs.feasible) continue;
    warm_iters.push_back(ws.iterations);
    cold_iters.push_back(cs.iterations);
  }
  c.check(warm_iters.size() == 10);
  c.check(median(warm_iters) <= median(cold_iters));
  MESSAGE("median iterations warm ", median(warm_iters), " vs cold ", median(cold_iters));
}

TEST_CASE("C12 tracking-loss drill") {
  Criterion c{"C12", "mid-mission reset: mission completes, feasible plan within 3 periods"};
  Scene scene;
  scene.name = "drill";
  scene.obstacles.push_back(make_box({6, 0.3, 0}, {1.2, 1.2, 1.2}));

  MissionSpec spec;
  spec.name = "drill";
  spec.goals.push_back({Pose6(14, 0, 0, 0, 0, 0), 1.0});
  spec.timeout_s = 600.0;
  spec.sim_speedup = 8.0;
  spec.save_artifacts = false;
  spec.reset_at_s = 12.0;
  SyntheticScanSource source(scene, spec.scan_sensor, spec.scan_rate_hz, 0.08);
  const MissionReport report = run_mission(spec, source, &scene);

  c.check(report.completed);
  c.check(report.reset_events == 1);
  c.check(report.executed_min_clearance >= 0.0);
  c.check(report.first_feasible_after_reset_s >= 0.0);
  c.check(report.first_feasible_after_reset_s <= 3.0 * spec.replan_period_s);
  MESSAGE("first feasible plan ", report.first_feasible_after_reset_s, " s after reset");
}
