#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/raster.hpp"

namespace slicereg {

/// Displacement (phi_x, phi_y) stored on a coarse grid whose node (i, j) sits
/// at full-resolution pixel (i * grid_factor, j * grid_factor). Values at
/// other pixels are bilinear.
struct DisplacementField {
  int width = 0;   // full resolution
  int height = 0;
  int grid_factor = 1;
  ScalarField phi_x;  // coarse
  ScalarField phi_y;

  DisplacementField() = default;
  DisplacementField(int w, int h, int factor) : width(w), height(h), grid_factor(factor) {
    if (w < 1 || h < 1 || factor < 1) fail(ErrorCode::InvalidArgument, "invalid displacement field dimensions");
    phi_x = ScalarField(coarse_extent(w, factor), coarse_extent(h, factor), 0.0);
    phi_y = phi_x;
  }

  /// Nodes needed so the last one lies at or beyond the last pixel.
  static int coarse_extent(int n, int factor) { return (n - 1 + factor - 1) / factor + 1; }

  int coarse_width() const { return phi_x.width; }
  int coarse_height() const { return phi_x.height; }

  Vec2 at(double x, double y) const {
    const double g = grid_factor;
    return {phi_x.sample(x / g, y / g), phi_y.sample(x / g, y / g)};
  }
  Vec2 at(Vec2 p) const { return at(p.x, p.y); }

  friend bool operator==(const DisplacementField&, const DisplacementField&) = default;
};

/// Two little-endian float32 planes (phi_x then phi_y, coarse grid, row-major)
/// after a one-line JSON header.
inline void write_field(const std::string& path, const DisplacementField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path + " for writing");
  nlohmann::json header{{"width", f.coarse_width()},     {"height", f.coarse_height()},
                        {"grid_factor", f.grid_factor},  {"full_width", f.width},
                        {"full_height", f.height},       {"dtype", "float32le"}};
  out << header.dump() << '\n';
  auto plane = [&](const ScalarField& s) {
    for (double v : s.values) {
      const float fv = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &fv, 4);
      const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                  static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  };
  plane(f.phi_x);
  plane(f.phi_y);
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

inline DisplacementField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    fail(ErrorCode::Io, std::string("bad field header: ") + e.what());
  }
  DisplacementField f(h.at("full_width").get<int>(), h.at("full_height").get<int>(), h.at("grid_factor").get<int>());
  if (f.coarse_width() != h.at("width").get<int>() || f.coarse_height() != h.at("height").get<int>())
    fail(ErrorCode::Io, "field header dimensions are inconsistent");
  auto plane = [&](ScalarField& s) {
    for (double& v : s.values) {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
      float fv;
      std::memcpy(&fv, &bits, 4);
      v = fv;
    }
  };
  plane(f.phi_x);
  plane(f.phi_y);
  if (!in) fail(ErrorCode::Io, "truncated field file " + path);
  return f;
}

}  // namespace slicereg
