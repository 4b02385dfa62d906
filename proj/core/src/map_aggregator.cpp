#include "shrums/map_aggregator.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shrums {

namespace {
// 21 bits per axis around a centered offset; ~1e5 m of range at 0.1 m voxels.
constexpr int64_t kKeyOffset = int64_t{1} << 20;
constexpr int64_t kKeyMask = (int64_t{1} << 21) - 1;
}  // namespace

VoxelGrid::VoxelGrid(double voxel_size) : voxel_(voxel_size), inv_voxel_(1.0 / voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("VoxelGrid: voxel size must be positive");
}

int64_t VoxelGrid::key(int64_t kx, int64_t ky, int64_t kz) const {
  return ((kx + kKeyOffset) & kKeyMask) << 42 | ((ky + kKeyOffset) & kKeyMask) << 21 |
         ((kz + kKeyOffset) & kKeyMask);
}

bool VoxelGrid::insert(const Vec3& p) {
  const int64_t kx = static_cast<int64_t>(std::floor(p.x() * inv_voxel_));
  const int64_t ky = static_cast<int64_t>(std::floor(p.y() * inv_voxel_));
  const int64_t kz = static_cast<int64_t>(std::floor(p.z() * inv_voxel_));
  return cells_.try_emplace(key(kx, ky, kz), p).second;
}

std::optional<Vec3> VoxelGrid::nearest(const Vec3& q, double max_dist) const {
  const int64_t bx = static_cast<int64_t>(std::floor(q.x() * inv_voxel_));
  const int64_t by = static_cast<int64_t>(std::floor(q.y() * inv_voxel_));
  const int64_t bz = static_cast<int64_t>(std::floor(q.z() * inv_voxel_));
  const int max_shell = static_cast<int>(std::ceil(max_dist * inv_voxel_)) + 1;

  double best_d2 = max_dist * max_dist;
  std::optional<Vec3> best;
  auto probe = [&](int64_t kx, int64_t ky, int64_t kz) {
    const auto it = cells_.find(key(bx + kx, by + ky, bz + kz));
    if (it == cells_.end()) return;
    const double d2 = (it->second - q).squaredNorm();
    if (d2 <= best_d2) {
      best_d2 = d2;
      best = it->second;
    }
  };

  for (int shell = 0; shell <= max_shell; ++shell) {
    // A voxel in shell k is at least (k-1) voxels from q, so once a match is
    // closer than that the remaining shells cannot win.
    if (best && (shell - 1) * voxel_ > std::sqrt(best_d2)) break;
    if (shell == 0) {
      probe(0, 0, 0);
      continue;
    }
    for (int a = -shell; a <= shell; ++a)
      for (int b = -shell; b <= shell; ++b) {
        probe(shell, a, b);
        probe(-shell, a, b);
        if (std::abs(a) != shell) {
          probe(a, shell, b);
          probe(a, -shell, b);
        }
        if (std::abs(a) != shell && std::abs(b) != shell) {
          probe(a, b, shell);
          probe(a, b, -shell);
        }
      }
  }
  return best;
}

void VoxelGrid::crop_outside(const Vec3& center, double radius) {
  const double r2 = radius * radius;
  for (auto it = cells_.begin(); it != cells_.end();) {
    if ((it->second - center).squaredNorm() > r2) it = cells_.erase(it);
    else ++it;
  }
}

void VoxelGrid::clear() { cells_.clear(); }

std::vector<Vec3> VoxelGrid::points() const {
  std::vector<Vec3> out;
  out.reserve(cells_.size());
  for (const auto& [k, p] : cells_) out.push_back(p);
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  VoxelGrid grid(voxel_size);
  PointCloud out;
  out.frame = cloud.frame;
  for (const Vec3& p : cloud.points)
    if (grid.insert(p)) out.points.push_back(p);
  return out;
}

MapAggregator::MapAggregator(AggregatorConfig config)
    : config_(config), grid_(config.voxel_size) {}

void MapAggregator::reset() {
  grid_.clear();
  estimate_ = Pose6{};
  previous_estimate_ = Pose6{};
  frame_count_ = 0;
  last_timestamp_ = 0.0;
}

std::shared_ptr<const PointCloud> MapAggregator::snapshot() const {
  auto cloud = std::make_shared<PointCloud>();
  cloud->frame = Frame::World;
  cloud->points = grid_.points();
  return cloud;
}

RigidTransform MapAggregator::predict() const {
  const RigidTransform current = pose_to_transform(estimate_);
  if (frame_count_ < 2) return current;
  const RigidTransform previous = pose_to_transform(previous_estimate_);
  return current * (previous.inverse() * current);
}

void MapAggregator::merge(const PointCloud& sensor_points, const RigidTransform& transform) {
  for (const Vec3& p : sensor_points.points) grid_.insert(transform.apply(p));
  if (config_.crop_radius)
    grid_.crop_outside(transform.translation, *config_.crop_radius);
}

RegistrationResult MapAggregator::register_scan(const ScanFrame& scan) {
  RegistrationResult result;
  result.estimate = estimate_;
  if (scan.cloud.empty()) return result;  // nothing to register, estimate unchanged
  if (frame_count_ > 0 && scan.timestamp <= last_timestamp_)
    throw std::invalid_argument("MapAggregator: timestamps must be strictly increasing");

  const PointCloud pts = config_.downsample_scan
                             ? voxel_downsample(scan.cloud, config_.voxel_size)
                             : scan.cloud;

  if (frame_count_ == 0) {
    estimate_ = scan.prior.value_or(Pose6{});
    previous_estimate_ = estimate_;
    merge(pts, pose_to_transform(estimate_));
    frame_count_ = 1;
    last_timestamp_ = scan.timestamp;
    result.estimate = estimate_;
    result.accepted = true;
    result.first_frame = true;
    result.inlier_fraction = 1.0;
    return result;
  }

  RigidTransform transform = predict();
  double threshold = 3.0 * config_.voxel_size;
  double prev_mean = std::numeric_limits<double>::infinity();
  int iterations = 0;

  Eigen::Matrix3Xd src(3, pts.size());
  Eigen::Matrix3Xd dst(3, pts.size());
  for (; iterations < config_.max_iterations; ++iterations) {
    int matched = 0;
    double residual_sum = 0.0;
    for (const Vec3& p : pts.points) {
      const Vec3 world = transform.apply(p);
      const auto nn = grid_.nearest(world, threshold);
      if (!nn) continue;
      src.col(matched) = p;
      dst.col(matched) = *nn;
      residual_sum += (world - *nn).norm();
      ++matched;
    }
    if (matched < 6) {
      result.diverged = true;
      result.inlier_fraction = static_cast<double>(matched) / pts.size();
      last_timestamp_ = scan.timestamp;
      result.iterations = iterations;
      return result;
    }
    const double mean = residual_sum / matched;
    const Eigen::Matrix4d fit =
        Eigen::umeyama(src.leftCols(matched), dst.leftCols(matched), false);
    transform.rotation = fit.topLeftCorner<3, 3>();
    transform.translation = fit.topRightCorner<3, 1>();
    threshold = std::max(config_.voxel_size, 0.9 * threshold);
    if (std::abs(prev_mean - mean) < config_.convergence_delta) {
      ++iterations;
      break;
    }
    prev_mean = mean;
  }

  // Final stats at the converged transform drive the divergence gate.
  int matched = 0;
  double residual_sum = 0.0;
  for (const Vec3& p : pts.points) {
    const Vec3 world = transform.apply(p);
    const auto nn = grid_.nearest(world, threshold);
    if (!nn) continue;
    residual_sum += (world - *nn).norm();
    ++matched;
  }
  result.iterations = iterations;
  result.inlier_fraction = static_cast<double>(matched) / pts.size();
  result.mean_residual = matched > 0 ? residual_sum / matched : std::numeric_limits<double>::infinity();

  if (result.mean_residual > config_.residual_gate ||
      result.inlier_fraction < config_.min_inlier_fraction) {
    result.diverged = true;  // scan dropped, estimate unchanged
    last_timestamp_ = scan.timestamp;
    return result;
  }

  previous_estimate_ = estimate_;
  estimate_ = pose_from_transform(transform);
  merge(pts, transform);
  ++frame_count_;
  last_timestamp_ = scan.timestamp;
  result.estimate = estimate_;
  result.accepted = true;
  return result;
}

}  // namespace shrums
