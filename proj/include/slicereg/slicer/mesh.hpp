#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "slicereg/annotation.hpp"
#include "slicereg/error.hpp"

namespace slicereg {

inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  if (!(n > 0)) fail(ErrorCode::InvalidArgument, "zero-length 3D vector");
  return (1.0 / n) * a;
}

/// Triangle mesh with one region id per triangle. Coordinates in micrometers.
struct LabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> region_of;
  RegionTable regions;

  std::size_t size() const { return triangles.size(); }

  void validate() const {
    if (region_of.size() != triangles.size()) fail(ErrorCode::InvalidArgument, "one region id per triangle required");
    const int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles)
      for (int i : t)
        if (i < 0 || i >= n) fail(ErrorCode::InvalidArgument, "triangle index out of range");
    for (int r : region_of)
      if (!regions.count(r)) fail(ErrorCode::InvalidArgument, "region " + std::to_string(r) + " missing from table");
  }

  /// Every edge of the region's triangles is shared by exactly two of them.
  bool edge_closed(int region) const {
    std::map<std::pair<int, int>, int> uses;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      if (region_of[t] != region) continue;
      for (int k = 0; k < 3; ++k) {
        const int a = triangles[t][k], b = triangles[t][(k + 1) % 3];
        ++uses[{std::min(a, b), std::max(a, b)}];
      }
    }
    return std::all_of(uses.begin(), uses.end(), [](const auto& u) { return u.second == 2; });
  }

  /// Axis-aligned bounds as {min, max}.
  std::array<Vec3, 2> bounds() const {
    if (vertices.empty()) return {};
    Vec3 lo = vertices[0], hi = vertices[0];
    for (auto v : vertices) {
      lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
      hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    return {lo, hi};
  }

  /// Appends `other`, keeping its region ids.
  void append(const LabeledMesh& other) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (auto t : other.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    region_of.insert(region_of.end(), other.region_of.begin(), other.region_of.end());
    for (const auto& [id, info] : other.regions) regions[id] = info;
  }

  void transform(const std::array<double, 9>& rot, Vec3 shift) {
    for (auto& v : vertices)
      v = Vec3{rot[0] * v.x + rot[1] * v.y + rot[2] * v.z, rot[3] * v.x + rot[4] * v.y + rot[5] * v.z,
               rot[6] * v.x + rot[7] * v.y + rot[8] * v.z} +
          shift;
  }
};

// ---------------------------------------------------------------- primitives

/// Outward-oriented icosphere.
inline LabeledMesh make_icosphere(double radius, int subdivisions, Vec3 center = {}, int region = 1) {
  const double t = (1 + std::sqrt(5.0)) / 2;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& p : v) p = normalized(p);
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      v.push_back(normalized(0.5 * (v[a] + v[b])));
      return mid[key] = static_cast<int>(v.size()) - 1;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (auto [a, b, c] : f) {
      const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      next.insert(next.end(), {{a, ab, ca}, {b, bc, ab}, {c, ca, bc}, {ab, bc, ca}});
    }
    f = std::move(next);
  }
  LabeledMesh m;
  for (auto p : v) m.vertices.push_back(center + radius * p);
  m.triangles = std::move(f);
  m.region_of.assign(m.triangles.size(), region);
  m.regions[region] = {region, "region_" + std::to_string(region), {255, 255, 255}};
  return m;
}

/// Outward-oriented axis-aligned box.
inline LabeledMesh make_box(Vec3 lo, Vec3 hi, int region = 1) {
  LabeledMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({i & 1 ? hi.x : lo.x, i & 2 ? hi.y : lo.y, i & 4 ? hi.z : lo.z});
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  m.region_of.assign(m.triangles.size(), region);
  m.regions[region] = {region, "region_" + std::to_string(region), {255, 255, 255}};
  return m;
}

// ---------------------------------------------------------------- I/O

inline nlohmann::json region_table_to_json(const RegionTable& t) {
  auto out = nlohmann::json::array();
  for (const auto& [id, r] : t) out.push_back({{"id", id}, {"name", r.name}, {"color", r.color}});
  return out;
}

inline RegionTable region_table_from_json(const nlohmann::json& j) {
  const auto& arr = j.is_object() && j.contains("regions") ? j.at("regions") : j;
  if (!arr.is_array()) fail(ErrorCode::InvalidArgument, "region table must be a JSON array");
  RegionTable t;
  for (const auto& e : arr) {
    RegionInfo r;
    r.id = e.at("id").get<int>();
    if (r.id <= 0) fail(ErrorCode::InvalidArgument, "region ids must be positive");
    r.name = e.value("name", "region_" + std::to_string(r.id));
    if (e.contains("color")) r.color = e.at("color").get<std::array<std::uint8_t, 3>>();
    t[r.id] = r;
  }
  return t;
}

inline RegionTable read_region_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  try {
    return region_table_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, path + ": " + e.what());
  }
}

inline void write_region_table(const std::string& path, const RegionTable& t) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out << region_table_to_json(t).dump(2) << '\n';
}

/// OBJ with one group (`g` or `o`) per region. A group name is matched
/// against region names first, then read as a numeric id. Polygons are
/// fan-triangulated.
inline LabeledMesh read_obj(const std::string& path, const RegionTable& regions) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::map<std::string, int> by_name;
  for (const auto& [id, r] : regions) by_name[r.name] = id;
  LabeledMesh m;
  m.regions = regions;
  int current = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x >> p.y >> p.z)) fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": bad vertex");
      m.vertices.push_back(p);
    } else if (tag == "g" || tag == "o") {
      std::string name;
      std::getline(ss >> std::ws, name);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
      if (auto it = by_name.find(name); it != by_name.end()) {
        current = it->second;
      } else {
        try {
          std::size_t used = 0;
          current = std::stoi(name, &used);
          if (used != name.size() || !regions.count(current)) throw std::invalid_argument(name);
        } catch (const std::exception&) {
          fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": group '" + name + "' is not in the region table");
        }
      }
    } else if (tag == "f") {
      if (current < 0) fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": face outside a region group");
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        int i = 0;
        try {
          i = std::stoi(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": bad face index");
        }
        idx.push_back(i < 0 ? static_cast<int>(m.vertices.size()) + i : i - 1);
      }
      if (idx.size() < 3) fail(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": face needs 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        m.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        m.region_of.push_back(current);
      }
    }
  }
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Io, path + ": " + e.what());
  }
  return m;
}

inline void write_obj(const std::string& path, const LabeledMesh& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.precision(17);
  for (auto v : m.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) groups[m.region_of[t]].push_back(t);
  for (const auto& [id, tris] : groups) {
    out << "g " << m.regions.at(id).name << '\n';
    for (auto t : tris)
      out << "f " << m.triangles[t][0] + 1 << ' ' << m.triangles[t][1] + 1 << ' ' << m.triangles[t][2] + 1 << '\n';
  }
}

}  // namespace slicereg
