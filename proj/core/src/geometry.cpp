#include "shrums/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shrums {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Vec3 wrap_angles(const Vec3& a) {
  return {wrap_angle(a.x()), wrap_angle(a.y()), wrap_angle(a.z())};
}

Pose6::Pose6(double x_, double y_, double z_, double roll_, double pitch_, double yaw_)
    : x(x_), y(y_), z(z_),
      roll(wrap_angle(roll_)), pitch(wrap_angle(pitch_)), yaw(wrap_angle(yaw_)) {}

Pose6 Pose6::from(const Vec3& translation, const Vec3& rpy) {
  return Pose6(translation.x(), translation.y(), translation.z(),
               rpy.x(), rpy.y(), rpy.z());
}

bool Pose6::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
         std::isfinite(roll) && std::isfinite(pitch) && std::isfinite(yaw);
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

bool RigidTransform::orthonormal(double tol) const {
  const Mat3 should_be_identity = rotation * rotation.transpose();
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

bool PointCloud::all_finite() const {
  return std::all_of(points.begin(), points.end(),
                     [](const Vec3& p) { return p.allFinite(); });
}

void SensorModel::validate() const {
  constexpr double kFovFloor = 1e-3;  // rad; fx/fy blow up below this
  if (width_px < 2 || height_px < 2)
    throw std::invalid_argument("SensorModel: image must be at least 2x2 pixels");
  if (!(hfov >= kFovFloor && hfov < kPi) || !(vfov >= kFovFloor && vfov < kPi))
    throw std::invalid_argument("SensorModel: FOV must lie in [1e-3, pi) rad");
  if (!(d_min >= 0.0 && d_min < d_max))
    throw std::invalid_argument("SensorModel: require 0 <= d_min < d_max");
}

Vec3 ConvexPolytope::centroid() const {
  Vec3 c = Vec3::Zero();
  if (vertices.empty()) return c;
  for (const Vec3& v : vertices) c += v;
  return c / static_cast<double>(vertices.size());
}

void ConvexPolytope::aabb(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

Intrinsics intrinsics_from_sensor(const SensorModel& model) {
  model.validate();
  Intrinsics k;
  k.fx = model.width_px / (2.0 * std::tan(model.hfov / 2.0));
  k.fy = model.height_px / (2.0 * std::tan(model.vfov / 2.0));
  k.cx = model.width_px / 2.0;
  k.cy = model.height_px / 2.0;
  return k;
}

Mat3 rotation_from_angles(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  Mat3 r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  return r;
}

RigidTransform pose_to_transform(const Pose6& pose) {
  RigidTransform t;
  t.rotation = rotation_from_angles(pose.roll, pose.pitch, pose.yaw);
  t.translation = pose.translation();
  return t;
}

Pose6 pose_from_transform(const RigidTransform& transform) {
  const Mat3& r = transform.rotation;
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sp);
  double roll, yaw;
  if (std::abs(std::cos(pitch)) < 1e-9) {
    // Gimbal lock: only roll-yaw sum/difference is observable; put it in yaw.
    roll = 0.0;
    yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  }
  const Vec3& t = transform.translation;
  return Pose6(t.x(), t.y(), t.z(), roll, pitch, yaw);
}

Pose6 compose(const Pose6& a, const Pose6& b) {
  return pose_from_transform(pose_to_transform(a) * pose_to_transform(b));
}

PointCloud transform_points(const RigidTransform& transform, const PointCloud& cloud) {
  PointCloud out;
  out.frame = cloud.frame;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(transform.apply(p));
  return out;
}

std::array<Mat3, 3> rotation_angle_derivatives(const Pose6& pose) {
  const double cr = std::cos(pose.roll), sr = std::sin(pose.roll);
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);

  Mat3 rx, ry, rz, drx, dry, drz;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  drx << 0, 0, 0, 0, -sr, -cr, 0, cr, -sr;
  dry << -sp, 0, cp, 0, 0, 0, -cp, 0, -sp;
  drz << -sy, -cy, 0, cy, -sy, 0, 0, 0, 0;

  return {rz * ry * drx, rz * dry * rx, drz * ry * rx};
}

}  // namespace shrums
