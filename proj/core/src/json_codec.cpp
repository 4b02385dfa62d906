#include "shrums/json_codec.hpp"

#include <string>

namespace shrums {

namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}
json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// angle field with a _rad key or a _deg fallback
double angle_field(const json& j, const std::string& stem, double fallback) {
  if (j.contains(stem + "_rad")) return j.at(stem + "_rad").get<double>();
  if (j.contains(stem + "_deg")) return deg_to_rad(j.at(stem + "_deg").get<double>());
  return fallback;
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(json& j, const Pose6& p) {
  j = json{{"position_m", vec3_to(p.translation())}, {"rpy_rad", vec3_to(p.angles())}};
}

void from_json(const json& j, Pose6& p) {
  const Vec3 t = j.contains("position_m") ? vec3_from(j.at("position_m")) : Vec3::Zero();
  Vec3 a = Vec3::Zero();
  if (j.contains("rpy_rad")) a = vec3_from(j.at("rpy_rad"));
  else if (j.contains("rpy_deg")) {
    const Vec3 deg = vec3_from(j.at("rpy_deg"));
    a = {deg_to_rad(deg.x()), deg_to_rad(deg.y()), deg_to_rad(deg.z())};
  }
  p = Pose6::from(t, a);
}

void to_json(json& j, const SensorModel& m) {
  j = json{{"width_px", m.width_px},   {"height_px", m.height_px},
           {"hfov_rad", m.hfov},       {"vfov_rad", m.vfov},
           {"d_min_m", m.d_min},       {"d_max_m", m.d_max},
           {"mount", m.mount}};
}

void from_json(const json& j, SensorModel& m) {
  m = SensorModel{};
  maybe(j, "width_px", m.width_px);
  maybe(j, "height_px", m.height_px);
  m.hfov = angle_field(j, "hfov", m.hfov);
  m.vfov = angle_field(j, "vfov", m.vfov);
  maybe(j, "d_min_m", m.d_min);
  maybe(j, "d_max_m", m.d_max);
  maybe(j, "mount", m.mount);
}

void to_json(json& j, const ConvexPolytope& p) {
  json verts = json::array();
  for (const Vec3& v : p.vertices) verts.push_back(vec3_to(v));
  json faces = json::array();
  for (const auto& f : p.faces) faces.push_back(json::array({f[0], f[1], f[2]}));
  j = json{{"vertices_m", verts}, {"faces", faces}, {"degenerate", p.degenerate}};
}

void from_json(const json& j, ConvexPolytope& p) {
  p = ConvexPolytope{};
  for (const auto& v : j.at("vertices_m")) p.vertices.push_back(vec3_from(v));
  if (j.contains("faces"))
    for (const auto& f : j.at("faces"))
      p.faces.push_back({f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()});
  maybe(j, "degenerate", p.degenerate);
}

void to_json(json& j, const ObstaclePart& p) {
  j = json{{"polytope", p.polytope},
           {"concavity_m", p.concavity},
           {"over_threshold", p.over_threshold}};
}

void from_json(const json& j, ObstaclePart& p) {
  j.at("polytope").get_to(p.polytope);
  p.concavity = j.value("concavity_m", 0.0);
  p.over_threshold = j.value("over_threshold", false);
}

void to_json(json& j, const ObstacleSet& s) {
  j = json{{"parts", s.parts}, {"source_id", s.source_id}, {"timestamp_s", s.timestamp}};
}

void from_json(const json& j, ObstacleSet& s) {
  s = ObstacleSet{};
  if (j.contains("parts")) j.at("parts").get_to(s.parts);
  maybe(j, "source_id", s.source_id);
  s.timestamp = j.value("timestamp_s", 0.0);
}

void to_json(json& j, const DecompositionParams& p) {
  j = json{{"concavity_threshold_m", p.concavity_threshold},
           {"max_depth", p.max_depth},
           {"preprocess_resolution", p.preprocess_resolution},
           {"search_nodes", p.search_nodes},
           {"search_iterations", p.search_iterations}};
}

void from_json(const json& j, DecompositionParams& p) {
  p = DecompositionParams{};
  maybe(j, "concavity_threshold_m", p.concavity_threshold);
  maybe(j, "max_depth", p.max_depth);
  maybe(j, "preprocess_resolution", p.preprocess_resolution);
  maybe(j, "search_nodes", p.search_nodes);
  maybe(j, "search_iterations", p.search_iterations);
}

void to_json(json& j, const MeshingLimits& m) {
  j = json{{"edge_scale", m.edge_scale}, {"normal_cone_deg", m.normal_cone_deg}};
  if (m.max_edge_m) j["max_edge_m"] = *m.max_edge_m;
}

void from_json(const json& j, MeshingLimits& m) {
  m = MeshingLimits{};
  maybe(j, "edge_scale", m.edge_scale);
  maybe(j, "normal_cone_deg", m.normal_cone_deg);
  if (j.contains("max_edge_m")) m.max_edge_m = j.at("max_edge_m").get<double>();
}

void to_json(json& j, const AggregatorConfig& c) {
  j = json{{"voxel_size_m", c.voxel_size},
           {"max_iterations", c.max_iterations},
           {"convergence_delta_m", c.convergence_delta},
           {"residual_gate_m", c.residual_gate},
           {"min_inlier_fraction", c.min_inlier_fraction},
           {"downsample_scan", c.downsample_scan}};
  if (c.crop_radius) j["crop_radius_m"] = *c.crop_radius;
}

void from_json(const json& j, AggregatorConfig& c) {
  c = AggregatorConfig{};
  maybe(j, "voxel_size_m", c.voxel_size);
  maybe(j, "max_iterations", c.max_iterations);
  maybe(j, "convergence_delta_m", c.convergence_delta);
  maybe(j, "residual_gate_m", c.residual_gate);
  maybe(j, "min_inlier_fraction", c.min_inlier_fraction);
  maybe(j, "downsample_scan", c.downsample_scan);
  if (j.contains("crop_radius_m")) c.crop_radius = j.at("crop_radius_m").get<double>();
}

void to_json(json& j, const PlannerConfig& c) {
  j = json{{"horizon_m", c.horizon_m},
           {"states_per_meter", c.states_per_meter},
           {"d_safe_m", c.d_safe},
           {"goal_weight", c.goal_weight},
           {"orientation_weight_m_per_rad", c.orientation_weight},
           {"max_outer_iterations", c.max_outer_iterations},
           {"constraint_tolerance_m", c.constraint_tolerance},
           {"penalty_growth", c.penalty_growth},
           {"initial_penalty", c.initial_penalty},
           {"lock_roll", c.lock_roll},
           {"activation_margin_m", c.activation_margin}};
}

void from_json(const json& j, PlannerConfig& c) {
  c = PlannerConfig{};
  maybe(j, "horizon_m", c.horizon_m);
  maybe(j, "states_per_meter", c.states_per_meter);
  maybe(j, "d_safe_m", c.d_safe);
  maybe(j, "goal_weight", c.goal_weight);
  maybe(j, "orientation_weight_m_per_rad", c.orientation_weight);
  maybe(j, "max_outer_iterations", c.max_outer_iterations);
  maybe(j, "constraint_tolerance_m", c.constraint_tolerance);
  maybe(j, "penalty_growth", c.penalty_growth);
  maybe(j, "initial_penalty", c.initial_penalty);
  maybe(j, "lock_roll", c.lock_roll);
  maybe(j, "activation_margin_m", c.activation_margin);
}

void to_json(json& j, const FollowerConfig& c) {
  j = json{{"look_ahead_m", c.look_ahead},
           {"velocity_mps", c.velocity},
           {"turn_rate_radps", c.turn_rate},
           {"tick_dt_s", c.tick_dt}};
}

void from_json(const json& j, FollowerConfig& c) {
  c = FollowerConfig{};
  maybe(j, "look_ahead_m", c.look_ahead);
  maybe(j, "velocity_mps", c.velocity);
  maybe(j, "turn_rate_radps", c.turn_rate);
  maybe(j, "tick_dt_s", c.tick_dt);
}

void to_json(json& j, const GoalSpec& g) {
  j = json{{"pose", g.pose}, {"radius_m", g.radius}};
}

void from_json(const json& j, GoalSpec& g) {
  g = GoalSpec{};
  maybe(j, "pose", g.pose);
  maybe(j, "radius_m", g.radius);
}

void to_json(json& j, const MissionSpec& s) {
  j = json{{"name", s.name},
           {"start", s.start},
           {"goals", s.goals},
           {"virtual_sensor", s.virtual_sensor},
           {"scan_sensor", s.scan_sensor},
           {"planner", s.planner},
           {"aggregator", s.aggregator},
           {"decomposition", s.decomposition},
           {"meshing", s.meshing},
           {"follower", s.follower},
           {"median_window", s.median_window},
           {"replan_period_s", s.replan_period_s},
           {"scan_rate_hz", s.scan_rate_hz},
           {"timeout_s", s.timeout_s},
           {"abort_after_failed_replans", s.abort_after_failed_replans},
           {"sim_speedup", s.sim_speedup},
           {"save_artifacts", s.save_artifacts}};
  if (s.reset_at_s) j["reset_at_s"] = *s.reset_at_s;
  if (!s.robot.vertices.empty()) j["robot"] = s.robot;
}

void from_json(const json& j, MissionSpec& s) {
  s = MissionSpec{};
  maybe(j, "name", s.name);
  maybe(j, "start", s.start);
  if (j.contains("goals")) j.at("goals").get_to(s.goals);
  if (j.contains("virtual_sensor")) {
    const auto& v = j.at("virtual_sensor");
    if (v.is_string()) {
      const auto preset = preset_by_name(v.get<std::string>());
      if (!preset) throw std::invalid_argument("unknown sensor preset " + v.get<std::string>());
      s.virtual_sensor = *preset;
    } else {
      v.get_to(s.virtual_sensor);
    }
  }
  maybe(j, "scan_sensor", s.scan_sensor);
  maybe(j, "planner", s.planner);
  maybe(j, "aggregator", s.aggregator);
  maybe(j, "decomposition", s.decomposition);
  maybe(j, "meshing", s.meshing);
  maybe(j, "follower", s.follower);
  maybe(j, "median_window", s.median_window);
  maybe(j, "replan_period_s", s.replan_period_s);
  maybe(j, "scan_rate_hz", s.scan_rate_hz);
  maybe(j, "timeout_s", s.timeout_s);
  maybe(j, "abort_after_failed_replans", s.abort_after_failed_replans);
  maybe(j, "sim_speedup", s.sim_speedup);
  maybe(j, "save_artifacts", s.save_artifacts);
  if (j.contains("reset_at_s")) s.reset_at_s = j.at("reset_at_s").get<double>();
  if (j.contains("robot")) j.at("robot").get_to(s.robot);
}

void to_json(json& j, const IterationTrace& t) {
  j = json{{"iteration", t.iteration},
           {"objective", t.objective},
           {"max_violation_m", t.max_violation},
           {"penalty", t.penalty},
           {"trust", t.trust}};
}

void to_json(json& j, const PathSolution& s) {
  const char* status = "no_convergence";
  switch (s.status) {
    case PlanStatus::Converged: status = "converged"; break;
    case PlanStatus::NoConvergence: status = "no_convergence"; break;
    case PlanStatus::InfeasibleStart: status = "infeasible_start"; break;
    case PlanStatus::Cancelled: status = "cancelled"; break;
  }
  j = json{{"states", s.states},
           {"objective", s.objective},
           {"feasible", s.feasible},
           {"min_clearance_m", s.min_clearance},
           {"iterations", s.iterations},
           {"wall_time_s", s.wall_time_s},
           {"status", status},
           {"goal_within_horizon", s.goal_within_horizon},
           {"trace", s.trace}};
}

void to_json(json& j, const StageTimings& t) {
  j = json::object();
  for (const auto& [stage, samples] : t.seconds) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    if (!samples.empty()) mean /= static_cast<double>(samples.size());
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    j[stage] = json{{"samples_s", samples}, {"mean_s", mean}, {"median_s", median}};
  }
}

void to_json(json& j, const MissionReport& r) {
  j = json{{"completed", r.completed},
           {"aborted", r.aborted},
           {"goals_reached", r.goals_reached},
           {"sim_duration_s", r.sim_duration_s},
           {"wall_duration_s", r.wall_duration_s},
           {"path_length_m", r.path_length_m},
           {"executed_min_clearance_m", r.executed_min_clearance},
           {"max_consumed_path_age_s", r.max_consumed_path_age_s},
           {"obstacle_stamps_monotonic", r.obstacle_stamps_monotonic},
           {"replan_cycles", r.replan_cycles},
           {"no_convergence_events", r.no_convergence_events},
           {"divergence_events", r.divergence_events},
           {"reset_events", r.reset_events},
           {"first_feasible_after_reset_s", r.first_feasible_after_reset_s},
           {"timings", r.timings}};
}

void to_json(json& j, const Scene& s) {
  j = json{{"name", s.name}, {"polytopes", s.obstacles}};
}

void from_json(const json& j, Scene& s) {
  s = Scene{};
  maybe(j, "name", s.name);
  if (j.contains("boxes")) {
    for (const auto& b : j.at("boxes")) {
      const Vec3 center = vec3_from(b.at("center_m"));
      const Vec3 size = vec3_from(b.at("size_m"));
      const double yaw = angle_field(b, "yaw", 0.0);
      s.obstacles.push_back(make_box(center, size, yaw));
    }
  }
  if (j.contains("polytopes"))
    for (const auto& p : j.at("polytopes")) s.obstacles.push_back(p.get<ConvexPolytope>());
}

}  // namespace shrums
