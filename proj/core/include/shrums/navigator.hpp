#pragma once

#include "shrums/convex_decomposition.hpp"
#include "shrums/depth_image.hpp"
#include "shrums/depth_mesh.hpp"
#include "shrums/geometry.hpp"
#include "shrums/map_aggregator.hpp"
#include "shrums/scenes.hpp"
#include "shrums/trajectory_optimizer.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace shrums {

struct FollowerConfig {
  double look_ahead = 1.2;   // meters of arc length ahead of the projection
  double velocity = 0.3;     // m/s
  double turn_rate = 1.0;    // rad/s slew cap
  double tick_dt = 0.1;      // s, fixed follower/simulation tick
};

struct FollowerState {
  PathSolution path;
  double progress = 0.0;  // arc length along the path, non-decreasing
  double look_ahead = 1.2;
  double velocity = 0.3;
};

/// Projects the robot onto the path (progress only moves forward), then
/// returns the pose at look_ahead meters of arc length further along, with
/// orientation interpolated (angle-wrapped) between the bracketing states.
/// Past the end of the path the reference pins to the terminal state.
Pose6 follow_reference(FollowerState& state, const Pose6& robot_pose);

/// Kinematic step: translate toward the reference at speed min(v, dist/dt)
/// (no overshoot), slew each angle toward the reference under the rate cap.
Pose6 step_robot(const Pose6& pose, const Pose6& reference, double v, double dt,
                 double turn_rate = 1.0);

struct GoalSpec {
  Pose6 pose;
  double radius = 1.0;  // positional goal region
};

struct MissionSpec {
  std::string name = "mission";
  Pose6 start;
  std::vector<GoalSpec> goals;
  /// Hallucinated sensor driving the planner.
  SensorModel virtual_sensor;
  /// Physical stand-in generating the scan stream in synthetic missions.
  SensorModel scan_sensor;
  PlannerConfig planner;
  AggregatorConfig aggregator;
  DecompositionParams decomposition;
  MeshingLimits meshing;
  FollowerConfig follower;
  ConvexPolytope robot;  // empty -> default_robot_body()
  int median_window = 3;
  double replan_period_s = 1.0;  // sim seconds
  double scan_rate_hz = 5.0;
  double timeout_s = 600.0;  // sim seconds
  int abort_after_failed_replans = 10;
  /// Tracking-loss drill: force an aggregator reset at this sim time.
  std::optional<double> reset_at_s;
  /// Upper bound on sim speed relative to wall time. Keeps the pipeline
  /// stages supplied with wall time on slow machines.
  double sim_speedup = 5.0;
  bool save_artifacts = true;

  MissionSpec();
  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  Pose6 pose;
  double clearance = 0.0;  // vs ground truth when available
};

struct StageTimings {
  // Keyed sample lists; keys follow the pipeline stage names
  // "Sensor Simulation", "Mesh Recon.", "Convex Decomp.", "Path Opt.".
  std::map<std::string, std::vector<double>> seconds;
};

struct MissionReport {
  bool completed = false;
  bool aborted = false;
  int goals_reached = 0;
  double sim_duration_s = 0.0;
  double wall_duration_s = 0.0;
  double path_length_m = 0.0;
  /// Minimum swept clearance of the executed trajectory against ground truth
  /// (or against the final aggregated map when no ground truth exists).
  double executed_min_clearance = 0.0;
  double max_consumed_path_age_s = 0.0;
  bool obstacle_stamps_monotonic = true;
  int replan_cycles = 0;
  int no_convergence_events = 0;
  int divergence_events = 0;
  int reset_events = 0;
  /// Sim-time delay from an injected reset to the next feasible plan built
  /// from post-reset data; negative when no reset happened.
  double first_feasible_after_reset_s = -1.0;
  std::vector<TrajectorySample> trajectory;
  StageTimings timings;
};

/// Scan provider interface; `next` is polled as sim time advances and returns
/// a frame when one is due.
class ScanSource {
 public:
  virtual ~ScanSource() = default;
  virtual std::optional<ScanFrame> next(double sim_time, const Pose6& true_sensor_pose) = 0;
};

/// Renders the ground-truth scene from the instantaneous sensor pose and
/// returns the sensor-frame cloud, closing the simulation loop.
class SyntheticScanSource : public ScanSource {
 public:
  SyntheticScanSource(const Scene& scene, SensorModel sensor, double rate_hz,
                      double surface_spacing = 0.05);
  std::optional<ScanFrame> next(double sim_time, const Pose6& true_sensor_pose) override;

 private:
  PointCloud dense_;
  SensorModel sensor_;
  double period_;
  double next_due_ = 0.0;
};

/// Replays recorded frames by timestamp, ignoring the robot pose.
class ReplayScanSource : public ScanSource {
 public:
  explicit ReplayScanSource(std::vector<ScanFrame> frames);
  std::optional<ScanFrame> next(double sim_time, const Pose6&) override;

 private:
  std::vector<ScanFrame> frames_;
  std::size_t index_ = 0;
};

/// Loads a scan directory: manifest.json with per-frame file names,
/// timestamps and optional priors, plus the referenced PLY/PCD files.
std::vector<ScanFrame> load_scan_directory(const std::string& dir);

/// Runs the full staged pipeline: aggregate -> render/mesh/decompose ->
/// plan -> follow, connected by single-slot latest-value channels with one
/// worker per stage. The follower advances a fixed-tick simulated robot and
/// consumes only feasible paths younger than two replan periods. Artifacts
/// (trajectory CSV, timing JSON, per-cycle OBJ/PGM/JSON) land in out_dir when
/// it is non-empty and save_artifacts is set.
MissionReport run_mission(const MissionSpec& spec, ScanSource& scans,
                          const Scene* ground_truth = nullptr,
                          const std::string& out_dir = "");

/// Replay overload.
MissionReport run_mission(const MissionSpec& spec, const std::vector<ScanFrame>& stream,
                          const Scene* ground_truth = nullptr,
                          const std::string& out_dir = "");

}  // namespace shrums
