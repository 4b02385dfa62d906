#include "shrums/io.hpp"

#include "shrums/json_codec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shrums::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

int ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return -1;
}

}  // namespace

PointCloud read_ply(const std::string& path) {
  std::ifstream in = open_in(path, true);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) fail(path, "not a PLY file");

  bool binary = false;
  std::size_t vertex_count = 0;
  struct Property {
    std::string name;
    int size = 0;
    bool is_double = false;
  };
  std::vector<Property> props;
  bool in_vertex_element = false;
  bool header_done = false;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt != "ascii") fail(path, "unsupported PLY format " + fmt);
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ls >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (in_vertex_element) in_vertex_element = false;
        else if (vertex_count == 0) fail(path, "vertex element must come first");
      }
    } else if (tok == "property" && in_vertex_element) {
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") fail(path, "list property on vertex element unsupported");
      ls >> p.name;
      p.size = ply_type_size(type);
      if (p.size < 0) fail(path, "unknown property type " + type);
      p.is_double = (type == "double" || type == "float64");
      props.push_back(p);
    } else if (tok == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) fail(path, "missing end_header");

  int ix = -1, iy = -1, iz = -1;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    if (props[i].name == "x") ix = i;
    if (props[i].name == "y") iy = i;
    if (props[i].name == "z") iz = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) fail(path, "missing x/y/z vertex properties");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);

  if (!binary) {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      if (!std::getline(in, line)) fail(path, "truncated vertex data");
      std::istringstream ls(line);
      Vec3 p;
      double value;
      for (int i = 0; i < static_cast<int>(props.size()); ++i) {
        if (!(ls >> value)) fail(path, "malformed vertex line");
        if (i == ix) p.x() = value;
        if (i == iy) p.y() = value;
        if (i == iz) p.z() = value;
      }
      cloud.points.push_back(p);
    }
  } else {
    std::size_t stride = 0;
    std::vector<std::size_t> offsets(props.size());
    for (std::size_t i = 0; i < props.size(); ++i) {
      offsets[i] = stride;
      stride += props[i].size;
    }
    std::vector<char> row(stride);
    auto read_scalar = [&](int idx) -> double {
      const char* at = row.data() + offsets[idx];
      if (props[idx].is_double) {
        double d;
        std::memcpy(&d, at, 8);
        return d;
      }
      float f;
      std::memcpy(&f, at, 4);
      return f;
    };
    for (std::size_t v = 0; v < vertex_count; ++v) {
      in.read(row.data(), static_cast<std::streamsize>(stride));
      if (!in) fail(path, "truncated binary vertex data");
      cloud.points.emplace_back(read_scalar(ix), read_scalar(iy), read_scalar(iz));
    }
  }
  if (!cloud.all_finite()) fail(path, "non-finite coordinates");
  return cloud;
}

void write_ply(const std::string& path, const PointCloud& cloud, bool binary, bool as_double) {
  std::ofstream out = open_out(path, binary);
  const char* scalar = as_double ? "double" : "float";
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property " << scalar << " x\nproperty " << scalar << " y\nproperty "
      << scalar << " z\nend_header\n";
  if (!binary) {
    out.precision(17);
    for (const Vec3& p : cloud.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
  } else if (as_double) {
    for (const Vec3& p : cloud.points) {
      const double d[3] = {p.x(), p.y(), p.z()};
      out.write(reinterpret_cast<const char*>(d), sizeof(d));
    }
  } else {
    for (const Vec3& p : cloud.points) {
      const float f[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                          static_cast<float>(p.z())};
      out.write(reinterpret_cast<const char*>(f), sizeof(f));
    }
  }
  if (!out) fail(path, "write failed");
}

PointCloud read_pcd(const std::string& path) {
  std::ifstream in = open_in(path, false);
  std::string line;
  std::vector<std::string> fields;
  std::size_t count = 0;
  bool data_section = false;

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "FIELDS") {
      std::string f;
      while (ls >> f) fields.push_back(f);
    } else if (tok == "POINTS") {
      ls >> count;
    } else if (tok == "DATA") {
      std::string mode;
      ls >> mode;
      if (mode != "ascii") fail(path, "only ascii PCD supported");
      data_section = true;
      break;
    }
  }
  if (!data_section) fail(path, "missing DATA section");
  int ix = -1, iy = -1, iz = -1;
  for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
    if (fields[i] == "x") ix = i;
    if (fields[i] == "y") iy = i;
    if (fields[i] == "z") iz = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) fail(path, "missing x/y/z fields");

  PointCloud cloud;
  cloud.points.reserve(count);
  while (std::getline(in, line) && cloud.points.size() < count) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Vec3 p = Vec3::Zero();
    double value;
    for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
      if (!(ls >> value)) fail(path, "malformed data line");
      if (i == ix) p.x() = value;
      if (i == iy) p.y() = value;
      if (i == iz) p.z() = value;
    }
    cloud.points.push_back(p);
  }
  if (cloud.points.size() != count) fail(path, "truncated data section");
  if (!cloud.all_finite()) fail(path, "non-finite coordinates");
  return cloud;
}

void write_pcd(const std::string& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path, false);
  out.precision(17);
  out << "# .PCD v.7 - Point Cloud Data\nVERSION .7\nFIELDS x y z\nSIZE 4 4 4\n"
      << "TYPE F F F\nCOUNT 1 1 1\nWIDTH " << cloud.points.size()
      << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " << cloud.points.size()
      << "\nDATA ascii\n";
  for (const Vec3& p : cloud.points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
  if (!out) fail(path, "write failed");
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out = open_out(path, false);
  out.precision(17);
  for (const Vec3& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const Vec3& n : mesh.normals)
    out << "vn " << n.x() << " " << n.y() << " " << n.z() << "\n";
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << "f";
    for (int v : tri) out << " " << (v + 1) << "//" << (t + 1);
    out << "\n";
  }
  if (!out) fail(path, "write failed");
}

void write_obj(const std::string& path, const ObstacleSet& set) {
  std::ofstream out = open_out(path, false);
  out.precision(17);
  int vertex_base = 1;
  for (std::size_t i = 0; i < set.parts.size(); ++i) {
    const ConvexPolytope& poly = set.parts[i].polytope;
    out << "o part_" << i << "\n";
    for (const Vec3& v : poly.vertices)
      out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& f : poly.faces)
      out << "f " << (vertex_base + f[0]) << " " << (vertex_base + f[1]) << " "
          << (vertex_base + f[2]) << "\n";
    vertex_base += static_cast<int>(poly.vertices.size());
  }
  if (!out) fail(path, "write failed");
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in = open_in(path, false);
  TriangleMesh mesh;
  std::string line;
  auto parse_index = [&](const std::string& tok) {
    const std::size_t slash = tok.find('/');
    const int idx = std::stoi(slash == std::string::npos ? tok : tok.substr(0, slash));
    // OBJ indices are 1-based; negatives count back from the end.
    return idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx;
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      mesh.vertices.push_back(v);
    } else if (tok == "f") {
      std::vector<int> idx;
      std::string t;
      while (ls >> t) idx.push_back(parse_index(t));
      for (std::size_t i = 2; i < idx.size(); ++i)
        mesh.triangles.push_back({idx[0], idx[i - 1], idx[i]});
    }
  }
  mesh.normals.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3 n = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                       .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    const double len = n.norm();
    mesh.normals.push_back(len > 1e-15 ? Vec3(n / len) : Vec3::UnitX());
  }
  if (!mesh.valid_indices()) fail(path, "face index out of range");
  return mesh;
}

void write_pgm16(const std::string& path, const DepthImage& img) {
  std::ofstream out = open_out(path, true);
  out << "P5\n" << img.width << " " << img.height << "\n65535\n";
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      uint16_t mm = 0;
      if (img.defined(u, v)) {
        const double q = std::round(img.at(u, v) * 1000.0);
        mm = static_cast<uint16_t>(std::clamp(q, 1.0, 65535.0));
      }
      const unsigned char bytes[2] = {static_cast<unsigned char>(mm >> 8),
                                      static_cast<unsigned char>(mm & 0xff)};
      out.write(reinterpret_cast<const char*>(bytes), 2);
    }
  }
  if (!out) fail(path, "write failed");
}

void write_depth_json(const std::string& path, const DepthImage& img) {
  nlohmann::json j;
  j["width"] = img.width;
  j["height"] = img.height;
  j["sensor"] = img.sensor;
  j["pose"] = img.pose;
  nlohmann::json cells = nlohmann::json::array();
  for (double c : img.cells) {
    if (std::isfinite(c)) cells.push_back(c);
    else cells.push_back(nullptr);
  }
  j["cells_m"] = std::move(cells);
  std::ofstream out = open_out(path, false);
  out << j.dump();
  if (!out) fail(path, "write failed");
}

DepthImage read_depth_json(const std::string& path) {
  std::ifstream in = open_in(path, false);
  nlohmann::json j;
  in >> j;
  DepthImage img = DepthImage::undefined(j.at("sensor").get<SensorModel>(),
                                         j.at("pose").get<Pose6>());
  const auto& cells = j.at("cells_m");
  if (static_cast<int>(cells.size()) != img.width * img.height)
    fail(path, "cell count does not match image size");
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!cells[i].is_null()) img.cells[i] = cells[i].get<double>();
  return img;
}

void write_obstacles_json(const std::string& path, const ObstacleSet& set) {
  std::ofstream out = open_out(path, false);
  out << nlohmann::json(set).dump(2);
  if (!out) fail(path, "write failed");
}

ObstacleSet read_obstacles_json(const std::string& path) {
  std::ifstream in = open_in(path, false);
  nlohmann::json j;
  in >> j;
  return j.get<ObstacleSet>();
}

}  // namespace shrums::io
