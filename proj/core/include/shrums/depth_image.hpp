#pragma once

#include "shrums/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace shrums {

/// Organized W x H grid of range values. A cell stores the range along the
/// sensor's optical (x) axis in meters, or NaN when undefined. `pose` is the
/// virtual sensor placement in the world frame.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> cells;  // row-major, NaN = undefined
  SensorModel sensor;
  Pose6 pose;
  bool rendered_from_empty_map = false;

  static DepthImage undefined(const SensorModel& model, const Pose6& pose);

  double& at(int u, int v) { return cells[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return cells[static_cast<std::size_t>(v) * width + u]; }
  bool defined(int u, int v) const;
  int defined_count() const;
};

struct PixelCoord {
  double u = 0.0, v = 0.0;
};

/// Projects a sensor-frame point (x forward, y left, z up):
///   u = fx * (-y/x) + cx,  v = fy * (-z/x) + cy.
/// Returns nullopt for points with x <= 0 or projections outside
/// [0, W) x [0, H). cx and cy sit at the image center by construction, so the
/// image bounds are recovered from the intrinsics alone.
std::optional<PixelCoord> project_point(const Vec3& p_sensor, const Intrinsics& k);

/// Renders the hallucinated depth image of a virtual sensor placed at `pose`
/// from a world-frame point cloud. Each in-range point is binned to the pixel
/// (floor u, floor v); a defined cell holds the minimum x over its bin. Runs
/// in a single pass over the cloud. An empty map yields an all-undefined
/// image, flagged via `rendered_from_empty_map`.
DepthImage render(const PointCloud& map, const SensorModel& model, const Pose6& pose);

/// Hole filling: every undefined cell with at least `min_support` defined
/// neighbors in its window is replaced by their median (mean of the two
/// middle values for even counts). Defined cells pass through unchanged.
/// One simultaneous pass over the input image; window must be 3 or 5.
DepthImage median_fill(const DepthImage& img, int window, int min_support = 3);

// --- sensor presets -------------------------------------------------------

/// Physical Water Linked Sonar 3D-15: 256x64 px, 90 x 45 deg, 15 m.
SensorModel sonar_3d15();

/// Evaluation presets. C1/C2 intentionally use a 100 x 25 deg FOV rather
/// than the physical sonar's 90 x 45 deg: a wider horizontal and narrower
/// vertical view suits forward navigation. Both conventions are kept as-is.
///   C1: 100 x 25 px, 100 x 25 deg, 10 m
///   C2: 200 x 50 px, 100 x 25 deg, 15 m
///   C3: 100 x 50 px, 100 x 50 deg,  5 m
SensorModel preset_c1();
SensorModel preset_c2();
SensorModel preset_c3();

/// Looks up "C1"/"C2"/"C3"/"sonar3d15" (case-insensitive).
std::optional<SensorModel> preset_by_name(const std::string& name);

/// Covers a total horizontal FOV >= pi by tiling pinhole sensors with tangent,
/// non-overlapping views. Each returned model reuses `base`'s resolution,
/// range and vertical FOV; mounts are yawed so the frusta tile the span.
std::vector<SensorModel> wide_fov_rig(const SensorModel& base, double total_hfov);

}  // namespace shrums
