#include "shrums/navigator.hpp"

#include "shrums/channels.hpp"
#include "shrums/io.hpp"
#include "shrums/json_codec.hpp"
#include "shrums/proximity.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace shrums {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Pose6 follow_reference(FollowerState& state, const Pose6& robot_pose) {
  const auto& states = state.path.states;
  if (states.empty()) throw std::invalid_argument("follow_reference: empty path");
  if (states.size() == 1) return states.front();

  // Cumulative arc length over translations.
  std::vector<double> arc(states.size(), 0.0);
  for (std::size_t i = 1; i < states.size(); ++i)
    arc[i] = arc[i - 1] + (states[i].translation() - states[i - 1].translation()).norm();
  const double total = arc.back();

  // Project the robot onto the path; progress may only move forward.
  const Vec3 p = robot_pose.translation();
  double best_dist = kInf;
  double best_arc = state.progress;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    const Vec3 a = states[i].translation();
    const Vec3 b = states[i + 1].translation();
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec3 q = a + t * ab;
    const double d = (q - p).norm();
    if (d < best_dist) {
      best_dist = d;
      best_arc = arc[i] + t * std::sqrt(len2);
    }
  }
  state.progress = std::clamp(std::max(state.progress, best_arc), 0.0, total);

  const double target = std::min(state.progress + state.look_ahead, total);
  std::size_t seg = 0;
  while (seg + 2 < states.size() && arc[seg + 1] < target) ++seg;
  const double seg_len = arc[seg + 1] - arc[seg];
  const double f = seg_len > 1e-12 ? (target - arc[seg]) / seg_len : 0.0;
  const Vec3 t_ref = states[seg].translation() +
                     f * (states[seg + 1].translation() - states[seg].translation());
  const Vec3 a_ref = wrap_angles(
      states[seg].angles() +
      f * wrap_angles(states[seg + 1].angles() - states[seg].angles()));
  return Pose6::from(t_ref, a_ref);
}

Pose6 step_robot(const Pose6& pose, const Pose6& reference, double v, double dt,
                 double turn_rate) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_robot: dt must be positive");
  const Vec3 to_ref = reference.translation() - pose.translation();
  const double dist = to_ref.norm();
  Vec3 t = pose.translation();
  if (dist > 1e-12) t += to_ref * (std::min(v * dt, dist) / dist);

  const double max_turn = turn_rate * dt;
  Vec3 a = pose.angles();
  const Vec3 da = wrap_angles(reference.angles() - a);
  for (int k = 0; k < 3; ++k)
    a[k] = wrap_angle(a[k] + std::clamp(da[k], -max_turn, max_turn));
  return Pose6::from(t, a);
}

MissionSpec::MissionSpec()
    : virtual_sensor(preset_c2()), scan_sensor(sonar_3d15()) {
  decomposition.concavity_threshold = 0.25;
  decomposition.max_depth = 2;
  decomposition.search_nodes = 6;
  decomposition.search_iterations = 8;
}

void MissionSpec::validate() const {
  if (goals.empty()) throw std::invalid_argument("MissionSpec: needs at least one goal");
  for (const GoalSpec& g : goals)
    if (!(g.radius > 0.0)) throw std::invalid_argument("MissionSpec: goal radii must be positive");
  virtual_sensor.validate();
  scan_sensor.validate();
  planner.validate();
  if (!(scan_rate_hz > 0.0) || !(replan_period_s > 0.0) || !(sim_speedup > 0.0))
    throw std::invalid_argument("MissionSpec: rates and periods must be positive");
}

SyntheticScanSource::SyntheticScanSource(const Scene& scene, SensorModel sensor,
                                         double rate_hz, double surface_spacing)
    : dense_(scene.sample_surfaces(surface_spacing)),
      sensor_(sensor),
      period_(1.0 / rate_hz) {}

std::optional<ScanFrame> SyntheticScanSource::next(double sim_time,
                                                   const Pose6& true_sensor_pose) {
  if (sim_time + 1e-9 < next_due_) return std::nullopt;
  next_due_ = sim_time + period_;

  const DepthImage img = render(dense_, sensor_, true_sensor_pose);
  const Intrinsics k = intrinsics_from_sensor(sensor_);
  ScanFrame frame;
  frame.timestamp = sim_time;
  frame.prior = true_sensor_pose;
  frame.cloud.frame = Frame::Sensor;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      if (!img.defined(u, v)) continue;
      const double r = img.at(u, v);
      frame.cloud.points.emplace_back(r, -r * (u + 0.5 - k.cx) / k.fx,
                                      -r * (v + 0.5 - k.cy) / k.fy);
    }
  return frame;
}

ReplayScanSource::ReplayScanSource(std::vector<ScanFrame> frames)
    : frames_(std::move(frames)) {
  std::sort(frames_.begin(), frames_.end(),
            [](const ScanFrame& a, const ScanFrame& b) { return a.timestamp < b.timestamp; });
}

std::optional<ScanFrame> ReplayScanSource::next(double sim_time, const Pose6&) {
  if (index_ >= frames_.size() || frames_[index_].timestamp > sim_time) return std::nullopt;
  return frames_[index_++];
}

std::vector<ScanFrame> load_scan_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error(manifest_path.string() + ": cannot open manifest");
  nlohmann::json manifest;
  in >> manifest;

  std::vector<ScanFrame> frames;
  for (const auto& entry : manifest.at("scans")) {
    ScanFrame frame;
    const std::string file = entry.at("file").get<std::string>();
    const fs::path path = fs::path(dir) / file;
    if (path.extension() == ".pcd") frame.cloud = io::read_pcd(path.string());
    else frame.cloud = io::read_ply(path.string());
    frame.cloud.frame = Frame::Sensor;
    frame.timestamp = entry.at("timestamp_s").get<double>();
    if (entry.contains("prior")) frame.prior = entry.at("prior").get<Pose6>();
    frames.push_back(std::move(frame));
  }
  return frames;
}

namespace {

struct MapSnapshot {
  std::shared_ptr<const PointCloud> cloud;
  Pose6 estimate;
  double stamp = 0.0;
};

struct ObstacleSnapshot {
  ObstacleSet set;
  TriangleMesh mesh;
  DepthImage image;
  double stamp = 0.0;
  int cycle = 0;
};

struct PathSnapshot {
  std::shared_ptr<const PathSolution> solution;
  double stamp = 0.0;
  double obstacles_stamp = 0.0;
};

struct Pipeline {
  Pipeline(const MissionSpec& spec_, const Scene* truth_, std::string out_dir_,
           bool artifacts_, ConvexPolytope robot_, double replan_wall)
      : spec(spec_),
        truth(truth_),
        out_dir(std::move(out_dir_)),
        artifacts(artifacts_),
        robot(std::move(robot_)),
        replan_wall_s(replan_wall) {}

  const MissionSpec& spec;
  const Scene* truth;
  std::string out_dir;
  bool artifacts;
  ConvexPolytope robot;
  double replan_wall_s;  // replan period converted to wall time

  SimClock clock;
  std::atomic<bool> done{false};
  std::atomic<bool> abort{false};
  std::atomic<int> goal_index{0};

  mutable std::mutex pose_mutex;
  Pose6 true_pose;
  RigidTransform correction;  // est = correction * true, world-frame rigid map

  LatestSlot<std::shared_ptr<const MapSnapshot>> map_chan;
  LatestSlot<std::shared_ptr<const ObstacleSnapshot>> obstacle_chan;
  LatestSlot<std::shared_ptr<const PathSnapshot>> path_chan;

  std::mutex cancel_mutex;
  std::shared_ptr<std::atomic<bool>> active_cancel;
  std::chrono::steady_clock::time_point plan_started;

  std::mutex stats_mutex;
  StageTimings timings;
  int replans = 0;
  int no_convergence = 0;
  int divergence = 0;
  int resets = 0;
  double reset_time = -1.0;
  double first_feasible_after_reset = -1.0;
  bool stamps_monotonic = true;
  double last_obstacle_stamp_used = -kInf;

  Pose6 true_pose_copy() const {
    std::lock_guard lock(pose_mutex);
    return true_pose;
  }

  void set_true_pose(const Pose6& p) {
    std::lock_guard lock(pose_mutex);
    true_pose = p;
  }

  RigidTransform correction_copy() const {
    std::lock_guard lock(pose_mutex);
    return correction;
  }

  void set_correction(const RigidTransform& c) {
    std::lock_guard lock(pose_mutex);
    correction = c;
  }

  Pose6 estimated_robot() const {
    std::lock_guard lock(pose_mutex);
    return pose_from_transform(correction * pose_to_transform(true_pose));
  }

  void record_timing(const std::string& stage, double seconds) {
    std::lock_guard lock(stats_mutex);
    timings.seconds[stage].push_back(seconds);
  }
};

double wall_seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void aggregator_worker(Pipeline& pl, ScanSource& source) {
  MapAggregator aggregator(pl.spec.aggregator);
  const double poll = 0.5 / pl.spec.scan_rate_hz;
  double wake = 0.0;
  bool reset_pending = pl.spec.reset_at_s.has_value();

  while (!pl.done) {
    const double t = pl.clock.wait_until(wake, [&] { return pl.done.load(); });
    if (pl.done) break;
    wake = t + poll;

    const Pose6 sensor_pose = compose(pl.true_pose_copy(), pl.spec.scan_sensor.mount);
    auto frame = source.next(t, sensor_pose);
    if (!frame) continue;

    if (reset_pending && t >= *pl.spec.reset_at_s) {
      aggregator.reset();
      reset_pending = false;
      std::lock_guard lock(pl.stats_mutex);
      ++pl.resets;
      pl.reset_time = t;
    }

    const RegistrationResult result = aggregator.register_scan(*frame);
    if (result.diverged) {
      std::lock_guard lock(pl.stats_mutex);
      ++pl.divergence;
    }
    if (result.accepted && frame->prior) {
      pl.set_correction(pose_to_transform(result.estimate) *
                        pose_to_transform(*frame->prior).inverse());
    }

    auto snap = std::make_shared<MapSnapshot>();
    snap->cloud = aggregator.snapshot();
    snap->estimate = aggregator.estimate();
    snap->stamp = t;
    pl.map_chan.publish(snap);
  }
}

void perception_worker(Pipeline& pl) {
  uint64_t seen = 0;
  int cycle = 0;
  while (!pl.done) {
    auto got = pl.map_chan.wait_newer(seen, [&] { return pl.done.load(); },
                                      std::chrono::milliseconds(4));
    if (!got || pl.done) continue;
    seen = got->second;
    const auto& snap = *got->first;

    const Pose6 sensor_pose = compose(pl.estimated_robot(), pl.spec.virtual_sensor.mount);

    const auto t0 = std::chrono::steady_clock::now();
    DepthImage img = render(*snap.cloud, pl.spec.virtual_sensor, sensor_pose);
    img = median_fill(img, pl.spec.median_window);
    const double sim_time = wall_seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    TriangleMesh mesh = triangulate(img, pl.spec.meshing);
    const double mesh_time = wall_seconds_since(t1);

    const auto t2 = std::chrono::steady_clock::now();
    ObstacleSet set = decompose(mesh, pl.spec.decomposition);
    const double decomp_time = wall_seconds_since(t2);

    set.timestamp = pl.clock.now();
    set.source_id = pl.spec.name + "/cycle_" + std::to_string(cycle);

    auto obs = std::make_shared<ObstacleSnapshot>();
    obs->set = std::move(set);
    obs->mesh = std::move(mesh);
    obs->image = std::move(img);
    obs->stamp = snap.stamp;
    obs->cycle = cycle;
    pl.obstacle_chan.publish(obs);

    pl.record_timing("Sensor Simulation", sim_time);
    pl.record_timing("Mesh Recon.", mesh_time);
    pl.record_timing("Convex Decomp.", decomp_time);

    if (pl.artifacts) {
      namespace fs = std::filesystem;
      char name[32];
      std::snprintf(name, sizeof(name), "cycle_%04d", cycle);
      const fs::path dir = fs::path(pl.out_dir) / "cycles" / name;
      fs::create_directories(dir);
      io::write_pgm16((dir / "depth.pgm").string(), obs->image);
      io::write_depth_json((dir / "depth.json").string(), obs->image);
      io::write_obj((dir / "mesh.obj").string(), obs->mesh);
      io::write_obj((dir / "obstacles.obj").string(), obs->set);
      io::write_obstacles_json((dir / "obstacles.json").string(), obs->set);
    }

    // A fresh obstacle set makes a long-running plan stale: cancel it.
    {
      std::lock_guard lock(pl.cancel_mutex);
      if (pl.active_cancel &&
          wall_seconds_since(pl.plan_started) > pl.replan_wall_s)
        pl.active_cancel->store(true);
    }
    ++cycle;
  }
}

void planner_worker(Pipeline& pl) {
  uint64_t used_version = 0;
  double last_plan_sim = -kInf;
  int consecutive_failures = 0;
  int last_goal = -1;
  std::optional<PathSolution> previous;
  int plan_index = 0;

  while (!pl.done) {
    const auto latest = pl.obstacle_chan.latest();
    const double now_sim = pl.clock.now();
    const bool fresh = latest && latest->second > used_version;
    const bool due = latest && (now_sim - last_plan_sim) >= pl.spec.replan_period_s;
    if (!fresh && !due) {
      pl.obstacle_chan.wait_newer(used_version, [&] { return pl.done.load(); },
                                  std::chrono::milliseconds(3));
      continue;
    }
    const auto obs = latest->first;
    used_version = latest->second;

    const int goal_idx = pl.goal_index.load();
    if (goal_idx >= static_cast<int>(pl.spec.goals.size())) break;
    if (goal_idx != last_goal) {
      previous.reset();  // warm starts don't carry across goals
      last_goal = goal_idx;
    }

    {
      std::lock_guard lock(pl.stats_mutex);
      if (obs->set.timestamp < pl.last_obstacle_stamp_used) pl.stamps_monotonic = false;
      pl.last_obstacle_stamp_used = obs->set.timestamp;
    }

    const Pose6 start = pl.estimated_robot();
    const RigidTransform c = pl.correction_copy();
    const Pose6 goal_est = pose_from_transform(
        c * pose_to_transform(pl.spec.goals[goal_idx].pose));

    auto cancel = std::make_shared<std::atomic<bool>>(false);
    {
      std::lock_guard lock(pl.cancel_mutex);
      pl.active_cancel = cancel;
      pl.plan_started = std::chrono::steady_clock::now();
    }
    const WarmStartMode mode = previous ? WarmStartMode::Previous : WarmStartMode::Linear;
    const std::vector<Pose6> warm = warm_start(previous ? &*previous : nullptr, start,
                                               goal_est, pl.spec.planner, mode);
    PathSolution sol = plan(start, goal_est, obs->set, pl.robot, pl.spec.planner, &warm,
                            cancel.get());
    {
      std::lock_guard lock(pl.cancel_mutex);
      pl.active_cancel.reset();
    }
    last_plan_sim = pl.clock.now();

    pl.record_timing("Path Opt.", sol.wall_time_s);
    {
      std::lock_guard lock(pl.stats_mutex);
      ++pl.replans;
      if (sol.status == PlanStatus::NoConvergence) ++pl.no_convergence;
      if (sol.feasible && pl.reset_time >= 0.0 && pl.first_feasible_after_reset < 0.0 &&
          obs->set.timestamp > pl.reset_time)
        pl.first_feasible_after_reset = last_plan_sim - pl.reset_time;
    }

    if (pl.artifacts) {
      namespace fs = std::filesystem;
      const fs::path dir = fs::path(pl.out_dir) / "plans";
      fs::create_directories(dir);
      char name[32];
      std::snprintf(name, sizeof(name), "plan_%04d.json", plan_index);
      std::ofstream out(dir / name);
      out << nlohmann::json(sol).dump(2);
    }
    ++plan_index;

    if (sol.feasible) {
      auto ps = std::make_shared<PathSnapshot>();
      ps->solution = std::make_shared<PathSolution>(std::move(sol));
      ps->stamp = last_plan_sim;
      ps->obstacles_stamp = obs->set.timestamp;
      previous = *ps->solution;
      pl.path_chan.publish(ps);
      consecutive_failures = 0;
    } else {
      ++consecutive_failures;
      if (consecutive_failures >= pl.spec.abort_after_failed_replans) {
        pl.abort = true;
        pl.clock.interrupt();
      }
    }
  }
}

void write_artifacts(const Pipeline& pl, const MissionReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(pl.out_dir);

  std::ofstream csv(fs::path(pl.out_dir) / "trajectory.csv");
  csv << "t,x,y,z,roll,pitch,yaw,clearance\n";
  csv.precision(10);
  for (const TrajectorySample& s : report.trajectory)
    csv << s.t << ',' << s.pose.x << ',' << s.pose.y << ',' << s.pose.z << ','
        << s.pose.roll << ',' << s.pose.pitch << ',' << s.pose.yaw << ','
        << s.clearance << '\n';

  std::ofstream timings(fs::path(pl.out_dir) / "timings.json");
  timings << nlohmann::json(report.timings).dump(2);

  std::ofstream rep(fs::path(pl.out_dir) / "report.json");
  rep << nlohmann::json(report).dump(2);
}

}  // namespace

MissionReport run_mission(const MissionSpec& spec, ScanSource& scans,
                          const Scene* ground_truth, const std::string& out_dir) {
  spec.validate();
  const auto wall_begin = std::chrono::steady_clock::now();

  Pipeline pl(spec, ground_truth, out_dir, spec.save_artifacts && !out_dir.empty(),
              spec.robot.vertices.empty() ? default_robot_body() : spec.robot,
              spec.replan_period_s / spec.sim_speedup);
  pl.true_pose = spec.start;

  std::thread agg_thread(aggregator_worker, std::ref(pl), std::ref(scans));
  std::thread percep_thread(perception_worker, std::ref(pl));
  std::thread plan_thread(planner_worker, std::ref(pl));

  MissionReport report;
  report.executed_min_clearance = kInf;

  FollowerState follower;
  follower.look_ahead = spec.follower.look_ahead;
  follower.velocity = spec.follower.velocity;
  uint64_t follower_path_version = 0;

  const double dt = spec.follower.tick_dt;
  const double min_tick_wall = dt / spec.sim_speedup;
  double sim_t = 0.0;
  Pose6 prev_pose = spec.start;

  while (true) {
    const auto tick_begin = std::chrono::steady_clock::now();
    if (pl.abort.load()) {
      report.aborted = true;
      break;
    }
    if (sim_t >= spec.timeout_s) {
      report.aborted = true;
      break;
    }

    // Consume the newest feasible path unless it aged past two replan periods.
    const auto got = pl.path_chan.latest();
    if (got) {
      const auto& ps = *got->first;
      const double age = sim_t - ps.stamp;
      if (age <= 2.0 * spec.replan_period_s) {
        if (got->second != follower_path_version) {
          follower_path_version = got->second;
          follower.path = *ps.solution;
          follower.progress = 0.0;
        }
        report.max_consumed_path_age_s = std::max(report.max_consumed_path_age_s, age);

        const Pose6 est_robot = pl.estimated_robot();
        const Pose6 ref_est = follow_reference(follower, est_robot);
        const RigidTransform c = pl.correction_copy();
        const Pose6 ref_true =
            pose_from_transform(c.inverse() * pose_to_transform(ref_est));
        pl.set_true_pose(step_robot(pl.true_pose_copy(), ref_true, follower.velocity, dt,
                                    spec.follower.turn_rate));
      }
    }

    const Pose6 current = pl.true_pose_copy();
    double clearance = kInf;
    if (ground_truth && !ground_truth->obstacles.empty() &&
        (current.translation() - prev_pose.translation()).norm() > 1e-12) {
      const ConvexPolytope hull = swept_hull(pl.robot, prev_pose, current);
      Vec3 lo, hi;
      hull.aabb(lo, hi);
      for (const ConvexPolytope& obstacle : ground_truth->obstacles) {
        Vec3 olo, ohi;
        obstacle.aabb(olo, ohi);
        if (aabb_signed_distance(lo, hi, olo, ohi) >= clearance) continue;
        clearance = std::min(clearance,
                             signed_distance(hull, obstacle).signed_distance);
      }
      report.executed_min_clearance = std::min(report.executed_min_clearance, clearance);
    }
    report.trajectory.push_back({sim_t, current, clearance});
    report.path_length_m += (current.translation() - prev_pose.translation()).norm();
    prev_pose = current;

    const int goal_idx = pl.goal_index.load();
    if (goal_idx < static_cast<int>(spec.goals.size())) {
      const GoalSpec& goal = spec.goals[goal_idx];
      if ((current.translation() - goal.pose.translation()).norm() <= goal.radius) {
        pl.goal_index.store(goal_idx + 1);
        report.goals_reached = goal_idx + 1;
        if (goal_idx + 1 == static_cast<int>(spec.goals.size())) {
          report.completed = true;
          break;
        }
      }
    }

    sim_t += dt;
    pl.clock.advance(dt);

    const double elapsed = wall_seconds_since(tick_begin);
    if (elapsed < min_tick_wall)
      std::this_thread::sleep_for(std::chrono::duration<double>(min_tick_wall - elapsed));
  }

  pl.done = true;
  pl.clock.interrupt();
  {
    std::lock_guard lock(pl.cancel_mutex);
    if (pl.active_cancel) pl.active_cancel->store(true);
  }
  agg_thread.join();
  percep_thread.join();
  plan_thread.join();

  report.sim_duration_s = sim_t;
  report.wall_duration_s = wall_seconds_since(wall_begin);
  {
    std::lock_guard lock(pl.stats_mutex);
    report.timings = pl.timings;
    report.replan_cycles = pl.replans;
    report.no_convergence_events = pl.no_convergence;
    report.divergence_events = pl.divergence;
    report.reset_events = pl.resets;
    report.first_feasible_after_reset_s = pl.first_feasible_after_reset;
    report.obstacle_stamps_monotonic = pl.stamps_monotonic;
  }

  // Without ground truth, check the executed path against the final map.
  if (!ground_truth) {
    const auto snap = pl.map_chan.latest();
    if (snap && snap->first->cloud && !snap->first->cloud->empty()) {
      const auto& points = snap->first->cloud->points;
      double worst = kInf;
      for (std::size_t i = 1; i < report.trajectory.size(); ++i) {
        const ConvexPolytope hull = swept_hull(pl.robot, report.trajectory[i - 1].pose,
                                               report.trajectory[i].pose);
        if (hull.degenerate || hull.faces.empty()) continue;
        Vec3 lo, hi;
        hull.aabb(lo, hi);
        const auto planes = face_planes(hull);
        for (const Vec3& p : points) {
          if ((p.array() < lo.array() - 1.0).any() || (p.array() > hi.array() + 1.0).any())
            continue;
          worst = std::min(worst, hull_plane_distance(planes, p));
        }
      }
      report.executed_min_clearance = worst;
    }
  }

  if (pl.artifacts) write_artifacts(pl, report);
  return report;
}

MissionReport run_mission(const MissionSpec& spec, const std::vector<ScanFrame>& stream,
                          const Scene* ground_truth, const std::string& out_dir) {
  ReplayScanSource source(stream);
  return run_mission(spec, source, ground_truth, out_dir);
}

}  // namespace shrums
