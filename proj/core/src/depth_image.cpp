#include "shrums/depth_image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shrums {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

DepthImage DepthImage::undefined(const SensorModel& model, const Pose6& pose) {
  model.validate();
  DepthImage img;
  img.width = model.width_px;
  img.height = model.height_px;
  img.cells.assign(static_cast<std::size_t>(img.width) * img.height, kNan);
  img.sensor = model;
  img.pose = pose;
  return img;
}

bool DepthImage::defined(int u, int v) const { return std::isfinite(at(u, v)); }

int DepthImage::defined_count() const {
  int n = 0;
  for (double c : cells) n += std::isfinite(c) ? 1 : 0;
  return n;
}

std::optional<PixelCoord> project_point(const Vec3& p_sensor, const Intrinsics& k) {
  if (!(p_sensor.x() > 0.0)) return std::nullopt;
  const double u = k.fx * (-p_sensor.y() / p_sensor.x()) + k.cx;
  const double v = k.fy * (-p_sensor.z() / p_sensor.x()) + k.cy;
  const double w = 2.0 * k.cx, h = 2.0 * k.cy;
  if (!(u >= 0.0 && u < w && v >= 0.0 && v < h)) return std::nullopt;
  return PixelCoord{u, v};
}

DepthImage render(const PointCloud& map, const SensorModel& model, const Pose6& pose) {
  DepthImage img = DepthImage::undefined(model, pose);
  img.rendered_from_empty_map = map.empty();
  const Intrinsics k = intrinsics_from_sensor(model);
  const RigidTransform world_from_sensor = pose_to_transform(pose);

  for (const Vec3& pw : map.points) {
    const Vec3 p = world_from_sensor.apply_inverse(pw);
    const auto uv = project_point(p, k);
    if (!uv) continue;
    if (p.x() < model.d_min || p.x() > model.d_max) continue;
    const int u = static_cast<int>(std::floor(uv->u));
    const int v = static_cast<int>(std::floor(uv->v));
    double& cell = img.at(u, v);
    if (!(cell <= p.x())) cell = p.x();  // NaN compares false, so it seeds the min
  }
  return img;
}

DepthImage median_fill(const DepthImage& img, int window, int min_support) {
  if (window != 3 && window != 5)
    throw std::invalid_argument("median_fill: window must be 3 or 5");
  if (min_support < 1)
    throw std::invalid_argument("median_fill: min_support must be positive");

  DepthImage out = img;
  const int r = window / 2;
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(window) * window);

  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      if (img.defined(u, v)) continue;
      vals.clear();
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int uu = u + du, vv = v + dv;
          if (uu < 0 || uu >= img.width || vv < 0 || vv >= img.height) continue;
          if (img.defined(uu, vv)) vals.push_back(img.at(uu, vv));
        }
      }
      if (static_cast<int>(vals.size()) < min_support) continue;
      std::sort(vals.begin(), vals.end());
      const std::size_t n = vals.size();
      out.at(u, v) = (n % 2 == 1) ? vals[n / 2]
                                  : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    }
  }
  return out;
}

SensorModel sonar_3d15() {
  SensorModel m;
  m.width_px = 256;
  m.height_px = 64;
  m.hfov = deg_to_rad(90.0);
  m.vfov = deg_to_rad(45.0);
  m.d_min = 0.0;
  m.d_max = 15.0;
  return m;
}

SensorModel preset_c1() {
  SensorModel m;
  m.width_px = 100;
  m.height_px = 25;
  m.hfov = deg_to_rad(100.0);
  m.vfov = deg_to_rad(25.0);
  m.d_min = 0.0;
  m.d_max = 10.0;
  return m;
}

SensorModel preset_c2() {
  SensorModel m;
  m.width_px = 200;
  m.height_px = 50;
  m.hfov = deg_to_rad(100.0);
  m.vfov = deg_to_rad(25.0);
  m.d_min = 0.0;
  m.d_max = 15.0;
  return m;
}

SensorModel preset_c3() {
  SensorModel m;
  m.width_px = 100;
  m.height_px = 50;
  m.hfov = deg_to_rad(100.0);
  m.vfov = deg_to_rad(50.0);
  m.d_min = 0.0;
  m.d_max = 5.0;
  return m;
}

std::optional<SensorModel> preset_by_name(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "c1") return preset_c1();
  if (lower == "c2") return preset_c2();
  if (lower == "c3") return preset_c3();
  if (lower == "sonar3d15" || lower == "sonar-3d-15") return sonar_3d15();
  return std::nullopt;
}

std::vector<SensorModel> wide_fov_rig(const SensorModel& base, double total_hfov) {
  if (!(total_hfov > 0.0 && total_hfov <= 2.0 * kPi))
    throw std::invalid_argument("wide_fov_rig: total FOV must lie in (0, 2*pi]");
  // Split into the fewest pinhole views that each stay safely below pi.
  const double per_view_cap = std::min(base.hfov, 0.9 * kPi);
  const int count = std::max(1, static_cast<int>(std::ceil(total_hfov / per_view_cap)));
  const double per_view = total_hfov / count;

  std::vector<SensorModel> rig;
  rig.reserve(count);
  for (int i = 0; i < count; ++i) {
    SensorModel m = base;
    m.hfov = per_view;
    const double yaw = (i - (count - 1) / 2.0) * per_view;
    m.mount = compose(base.mount, Pose6(0, 0, 0, 0, 0, yaw));
    m.validate();
    rig.push_back(m);
  }
  return rig;
}

}  // namespace shrums
