#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/hull.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

struct NormalEstimate {
  std::vector<Vec2> normals;  // unit; zero vector where invalid
  std::vector<char> valid;    // 0 for isolated points
  std::size_t invalid_count() const {
    std::size_t n = 0;
    for (char v : valid) n += v == 0;
    return n;
  }
};

/// Moving-least-squares curve normals: the minor eigenvector of the
/// Gaussian-weighted (sigma = radius / 2) neighbourhood covariance. Signs
/// follow `reference` when given, otherwise point away from the centroid.
inline NormalEstimate mls_normals(std::span<const Vec2> points, double radius,
                                  std::span<const Vec2> reference = {}) {
  if (!(radius > 0)) fail(ErrorCode::InvalidArgument, "MLS radius must be positive");
  NormalEstimate out;
  out.normals.assign(points.size(), Vec2{});
  out.valid.assign(points.size(), 0);
  const PointGrid grid(points, radius);
  const Vec2 center = centroid(points);
  const double inv2s2 = 1.0 / (2 * (radius / 2) * (radius / 2));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nb = grid.within(points[i], radius);
    if (nb.size() < 3) continue;  // self plus at least two neighbours
    double wsum = 0;
    Vec2 mean{};
    for (auto j : nb) {
      const double w = std::exp(-norm2(points[j] - points[i]) * inv2s2);
      wsum += w;
      mean += w * points[j];
    }
    mean = mean / wsum;
    double sxx = 0, sxy = 0, syy = 0;
    for (auto j : nb) {
      const double w = std::exp(-norm2(points[j] - points[i]) * inv2s2);
      const Vec2 d = points[j] - mean;
      sxx += w * d.x * d.x;
      sxy += w * d.x * d.y;
      syy += w * d.y * d.y;
    }
    const double scale = sxx + syy;
    if (!(scale > 0)) continue;
    // Normalise so the direction does not depend on the point spacing scale.
    Vec2 n = perp(principal_direction(sxx / scale, sxy / scale, syy / scale));
    const Vec2 ref = !reference.empty() ? reference[i] : points[i] - center;
    if (dot(n, ref) < 0) n = -n;
    out.normals[i] = n;
    out.valid[i] = 1;
  }
  return out;
}

/// Single-point variant; throws IsolatedPoint when the neighbourhood is too
/// sparse to define a normal.
inline Vec2 mls_normal_at(std::span<const Vec2> points, std::size_t index, double radius) {
  const auto est = mls_normals(points, radius);
  if (!est.valid[index]) fail(ErrorCode::IsolatedPoint, "fewer than 2 neighbours within the MLS radius");
  return est.normals[index];
}

}  // namespace slicereg
