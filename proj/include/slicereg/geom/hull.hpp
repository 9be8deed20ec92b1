#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

/// Counter-clockwise convex hull (Andrew's monotone chain). Points lying on
/// hull edges are dropped.
inline std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 3) fail(ErrorCode::DegenerateHull, "fewer than 3 distinct points");
  std::vector<Vec2> hull(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && orient(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) fail(ErrorCode::DegenerateHull, "all points are collinear");
  return hull;
}

/// Points at arc-length steps of `spacing` along the closed loop, starting
/// at loop[0].
inline std::vector<Vec2> resample_polyline(std::span<const Vec2> loop, double spacing) {
  if (!(spacing > 0)) fail(ErrorCode::InvalidArgument, "spacing must be positive");
  std::vector<Vec2> out;
  if (loop.empty()) return out;
  const double total = perimeter(loop);
  const auto count = static_cast<std::size_t>(std::max(1.0, std::floor(total / spacing + 1e-9)));
  out.reserve(count);
  std::size_t seg = 0;
  double seg_start = 0;  // arc length at loop[seg]
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < count; ++i) {
    const double s = static_cast<double>(i) * spacing;
    double len = distance(loop[seg], loop[(seg + 1) % n]);
    while (seg + 1 < n && seg_start + len < s) {
      seg_start += len;
      ++seg;
      len = distance(loop[seg], loop[(seg + 1) % n]);
    }
    const double t = len > 0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
    out.push_back(loop[seg] + t * (loop[(seg + 1) % n] - loop[seg]));
  }
  return out;
}

struct OrientedBox {
  Vec2 center;
  std::array<Vec2, 2> axes;  // major, minor; right-handed
  std::array<double, 2> half_extents;

  Vec2 major() const { return axes[0]; }
  Vec2 minor() const { return axes[1]; }
  /// Coordinates of p in the box frame.
  Vec2 to_local(Vec2 p) const { return {dot(p - center, axes[0]), dot(p - center, axes[1])}; }
  Vec2 to_world(Vec2 l) const { return center + l.x * axes[0] + l.y * axes[1]; }
  /// Mirror image of p across the line through the center along `axis`.
  Vec2 reflect(Vec2 p, int axis = 0) const {
    Vec2 l = to_local(p);
    if (axis == 0) l.y = -l.y; else l.x = -l.x;
    return to_world(l);
  }
  /// Mirror image of a direction vector across the same line.
  Vec2 reflect_direction(Vec2 d, int axis = 0) const {
    Vec2 l{dot(d, axes[0]), dot(d, axes[1])};
    if (axis == 0) l.y = -l.y; else l.x = -l.x;
    return l.x * axes[0] + l.y * axes[1];
  }
};

/// Unit eigenvector of the largest eigenvalue of [[a, b], [b, c]].
inline Vec2 principal_direction(double a, double b, double c) {
  const double theta = 0.5 * std::atan2(2 * b, a - c);
  return {std::cos(theta), std::sin(theta)};
}

namespace detail {
inline Vec2 canonical_sign(Vec2 v) {
  constexpr double eps = 1e-12;
  if (v.y < -eps || (std::abs(v.y) <= eps && v.x < 0)) return -v;
  return v;
}
}  // namespace detail

/// Arc-length weighted mean and covariance of a closed polyline, i.e. the
/// limit of PCA over infinitely dense uniform samples of the loop.
inline void loop_moments(std::span<const Vec2> loop, Vec2& mean, double& sxx, double& sxy, double& syy) {
  double total = 0;
  Vec2 m{};
  double xx = 0, xy = 0, yy = 0;
  for (std::size_t i = 0, n = loop.size(); i < n; ++i) {
    const Vec2 p = loop[i], q = loop[(i + 1) % n];
    const double l = distance(p, q);
    total += l;
    m += (l / 2) * (p + q);
    xx += l * (p.x * p.x + p.x * q.x + q.x * q.x) / 3;
    yy += l * (p.y * p.y + p.y * q.y + q.y * q.y) / 3;
    xy += l * (2 * p.x * p.y + p.x * q.y + q.x * p.y + 2 * q.x * q.y) / 6;
  }
  mean = m / total;
  sxx = xx / total - mean.x * mean.x;
  sxy = xy / total - mean.x * mean.y;
  syy = yy / total - mean.y * mean.y;
}

/// PCA box of the uniformly sampled convex hull. Working on the hull rather
/// than the raw points keeps interior clutter and uneven sampling density
/// from steering the axes.
inline OrientedBox obb_from_points(std::span<const Vec2> points) {
  const auto hull = convex_hull(points);
  Vec2 mean;
  double sxx = 0, sxy = 0, syy = 0;
  loop_moments(hull, mean, sxx, sxy, syy);
  Vec2 a0 = principal_direction(sxx, sxy, syy);
  Vec2 a1 = perp(a0);
  std::array<double, 2> lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (auto p : hull) {
    const double u = dot(p, a0), v = dot(p, a1);
    lo[0] = std::min(lo[0], u); hi[0] = std::max(hi[0], u);
    lo[1] = std::min(lo[1], v); hi[1] = std::max(hi[1], v);
  }
  OrientedBox box;
  box.center = (0.5 * (lo[0] + hi[0])) * a0 + (0.5 * (lo[1] + hi[1])) * a1;
  std::array<double, 2> ext{0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])};
  if (ext[1] > ext[0]) {
    std::swap(a0, a1);
    std::swap(ext[0], ext[1]);
  }
  a0 = detail::canonical_sign(a0);
  box.axes = {a0, perp(a0)};
  box.half_extents = ext;
  return box;
}

}  // namespace slicereg
