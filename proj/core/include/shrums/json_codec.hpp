#pragma once

#include "shrums/convex_decomposition.hpp"
#include "shrums/depth_mesh.hpp"
#include "shrums/geometry.hpp"
#include "shrums/map_aggregator.hpp"
#include "shrums/navigator.hpp"
#include "shrums/scenes.hpp"
#include "shrums/trajectory_optimizer.hpp"

#include <nlohmann/json.hpp>

// JSON bindings for the configuration and artifact types. Keys carry
// explicit units (position_m, rpy_rad, hfov_rad, ...); angle fields also
// accept a *_deg spelling on input.
namespace shrums {

void to_json(nlohmann::json& j, const Pose6& p);
void from_json(const nlohmann::json& j, Pose6& p);

void to_json(nlohmann::json& j, const SensorModel& m);
void from_json(const nlohmann::json& j, SensorModel& m);

void to_json(nlohmann::json& j, const ConvexPolytope& p);
void from_json(const nlohmann::json& j, ConvexPolytope& p);

void to_json(nlohmann::json& j, const ObstaclePart& p);
void from_json(const nlohmann::json& j, ObstaclePart& p);
void to_json(nlohmann::json& j, const ObstacleSet& s);
void from_json(const nlohmann::json& j, ObstacleSet& s);

void to_json(nlohmann::json& j, const DecompositionParams& p);
void from_json(const nlohmann::json& j, DecompositionParams& p);

void to_json(nlohmann::json& j, const MeshingLimits& m);
void from_json(const nlohmann::json& j, MeshingLimits& m);

void to_json(nlohmann::json& j, const AggregatorConfig& c);
void from_json(const nlohmann::json& j, AggregatorConfig& c);

void to_json(nlohmann::json& j, const PlannerConfig& c);
void from_json(const nlohmann::json& j, PlannerConfig& c);

void to_json(nlohmann::json& j, const FollowerConfig& c);
void from_json(const nlohmann::json& j, FollowerConfig& c);

void to_json(nlohmann::json& j, const GoalSpec& g);
void from_json(const nlohmann::json& j, GoalSpec& g);

void to_json(nlohmann::json& j, const MissionSpec& s);
void from_json(const nlohmann::json& j, MissionSpec& s);

void to_json(nlohmann::json& j, const IterationTrace& t);
void to_json(nlohmann::json& j, const PathSolution& s);

void to_json(nlohmann::json& j, const StageTimings& t);
void to_json(nlohmann::json& j, const MissionReport& r);

void to_json(nlohmann::json& j, const Scene& s);
void from_json(const nlohmann::json& j, Scene& s);

}  // namespace shrums
