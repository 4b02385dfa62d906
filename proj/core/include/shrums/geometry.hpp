#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <vector>

namespace shrums {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);
Vec3 wrap_angles(const Vec3& a);

/// 6-DOF state: translation in meters, roll/pitch/yaw in radians.
/// Angles are stored wrapped to (-pi, pi].
struct Pose6 {
  double x = 0.0, y = 0.0, z = 0.0;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;

  Pose6() = default;
  Pose6(double x_, double y_, double z_, double roll_, double pitch_, double yaw_);
  static Pose6 from(const Vec3& translation, const Vec3& rpy);

  Vec3 translation() const { return {x, y, z}; }
  Vec3 angles() const { return {roll, pitch, yaw}; }
  bool finite() const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation.transpose() * (p - translation);
  }
  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;
  /// Rotation block is orthonormal with determinant +1.
  bool orthonormal(double tol = 1e-9) const;
};

enum class Frame { World, Sensor, Body };

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::World;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool all_finite() const;
};

/// Pinhole-style virtual range sensor. FOVs are full angles in radians and
/// must stay below pi (pinhole limit); ranges are meters along the optical
/// (x) axis. `mount` is the sensor pose relative to the robot body.
struct SensorModel {
  int width_px = 256;
  int height_px = 64;
  double hfov = deg_to_rad(90.0);
  double vfov = deg_to_rad(45.0);
  double d_min = 0.0;
  double d_max = 15.0;
  Pose6 mount;

  /// Throws std::invalid_argument on any violated field constraint.
  void validate() const;
};

struct Intrinsics {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
};

/// Vertex-set convex body. `faces` holds outward-oriented triangles and is
/// populated by convex_hull() for full-dimensional hulls; flat, collinear and
/// single-point bodies are kept but flagged degenerate.
struct ConvexPolytope {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  bool degenerate = false;

  bool empty() const { return vertices.empty(); }
  Vec3 centroid() const;
  void aabb(Vec3& lo, Vec3& hi) const;
};

/// fx = W/(2 tan(hfov/2)), fy = H/(2 tan(vfov/2)), cx = W/2, cy = H/2.
/// Rejects FOVs >= pi and FOVs below a 1e-3 rad floor.
Intrinsics intrinsics_from_sensor(const SensorModel& model);

/// Rotation convention: R = Rz(yaw) * Ry(pitch) * Rx(roll). Every rotation in
/// the pipeline goes through here, so swapping the convention is a local edit.
Mat3 rotation_from_angles(double roll, double pitch, double yaw);

RigidTransform pose_to_transform(const Pose6& pose);
Pose6 pose_from_transform(const RigidTransform& transform);

/// compose(a, b) places pose b in the frame of pose a.
Pose6 compose(const Pose6& a, const Pose6& b);

PointCloud transform_points(const RigidTransform& transform, const PointCloud& cloud);

/// d(rotation)/d(roll), d/d(pitch), d/d(yaw) at the given pose.
std::array<Mat3, 3> rotation_angle_derivatives(const Pose6& pose);

}  // namespace shrums
