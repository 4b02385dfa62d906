#pragma once

#include "shrums/convex_decomposition.hpp"
#include "shrums/depth_image.hpp"
#include "shrums/depth_mesh.hpp"
#include "shrums/geometry.hpp"

#include <string>
#include <vector>

namespace shrums::io {

/// PLY point clouds: ASCII and binary-little-endian, x/y/z stored as float32
/// or float64; unknown vertex properties are skipped.
PointCloud read_ply(const std::string& path);
void write_ply(const std::string& path, const PointCloud& cloud,
               bool binary = true, bool as_double = false);

/// ASCII PCD with x y z fields.
PointCloud read_pcd(const std::string& path);
void write_pcd(const std::string& path, const PointCloud& cloud);

/// Wavefront OBJ. Meshes carry per-face normals; obstacle sets write one
/// object per polytope. The reader keeps vertices and triangulated faces and
/// ignores everything else.
void write_obj(const std::string& path, const TriangleMesh& mesh);
void write_obj(const std::string& path, const ObstacleSet& set);
TriangleMesh read_obj(const std::string& path);

/// 16-bit PGM, millimeter quantization, 0 = undefined cell.
void write_pgm16(const std::string& path, const DepthImage& img);

/// Lossless JSON sidecar: float ranges plus the sensor model and pose.
void write_depth_json(const std::string& path, const DepthImage& img);
DepthImage read_depth_json(const std::string& path);

/// Obstacle index with per-part vertices, concavity and flags.
void write_obstacles_json(const std::string& path, const ObstacleSet& set);
ObstacleSet read_obstacles_json(const std::string& path);

}  // namespace shrums::io
