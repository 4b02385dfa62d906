#pragma once

#include "shrums/geometry.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

namespace shrums {

/// Sparse voxel hash keeping the first point inserted per voxel.
class VoxelGrid {
 public:
  explicit VoxelGrid(double voxel_size);

  /// Returns true when the point occupied a previously empty voxel.
  bool insert(const Vec3& p);
  /// Exact nearest stored point within max_dist of q, searched by expanding
  /// voxel shells with an early exit once closer shells cannot improve.
  std::optional<Vec3> nearest(const Vec3& q, double max_dist) const;
  void crop_outside(const Vec3& center, double radius);
  void clear();

  std::size_t size() const { return cells_.size(); }
  double voxel_size() const { return voxel_; }
  std::vector<Vec3> points() const;

 private:
  int64_t key(int64_t kx, int64_t ky, int64_t kz) const;
  double voxel_;
  double inv_voxel_;
  std::unordered_map<int64_t, Vec3> cells_;
};

/// One representative point per voxel, kept in input order.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

struct ScanFrame {
  PointCloud cloud;  // sensor frame
  double timestamp = 0.0;
  std::optional<Pose6> prior;  // odometry hint; anchors the first frame
};

struct AggregatorConfig {
  double voxel_size = 0.1;
  int max_iterations = 30;
  /// Stop when the mean correspondence residual changes less than this.
  double convergence_delta = 1e-4;
  /// Post-alignment gates: a scan is rejected (tracking-loss path) when the
  /// mean residual exceeds the gate or too few points found correspondences.
  double residual_gate = 0.15;
  double min_inlier_fraction = 0.3;
  bool downsample_scan = true;
  /// Optional local-map decay: drop voxels beyond this radius of the current
  /// estimate. Disabled by default; the map extent is otherwise unbounded.
  std::optional<double> crop_radius;
};

struct RegistrationResult {
  Pose6 estimate;
  bool accepted = false;
  bool diverged = false;
  bool first_frame = false;
  double mean_residual = 0.0;
  double inlier_fraction = 0.0;
  int iterations = 0;
};

/// Maintains the registered local point-cloud map. Scans are aligned with
/// point-to-point ICP against the voxel map, starting from a
/// constant-velocity extrapolation of the last two estimates; the
/// correspondence threshold starts at 3x voxel size and shrinks by 0.9 per
/// iteration down to the voxel size. Single writer; snapshots are immutable
/// and safe to hand to other pipeline stages.
class MapAggregator {
 public:
  explicit MapAggregator(AggregatorConfig config = {});

  RegistrationResult register_scan(const ScanFrame& scan);
  /// Empty map, identity estimate; the next scan re-initializes. Keeps the
  /// configuration.
  void reset();

  std::shared_ptr<const PointCloud> snapshot() const;
  const Pose6& estimate() const { return estimate_; }
  int frame_count() const { return frame_count_; }
  std::size_t point_count() const { return grid_.size(); }
  const AggregatorConfig& config() const { return config_; }

 private:
  RigidTransform predict() const;
  void merge(const PointCloud& sensor_points, const RigidTransform& transform);

  AggregatorConfig config_;
  VoxelGrid grid_;
  Pose6 estimate_;
  Pose6 previous_estimate_;
  int frame_count_ = 0;
  double last_timestamp_ = 0.0;
};

}  // namespace shrums
