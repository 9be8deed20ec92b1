#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

namespace slicereg {

struct Vec2 {
  double x = 0;
  double y = 0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 normalized(Vec2 a) {
  const double n = norm(a);
  return n > 0 ? a / n : Vec2{};
}
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
constexpr double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Angle between two directions in degrees, in [0, 180].
inline double angle_between_deg(Vec2 a, Vec2 b) {
  const double c = std::clamp(dot(normalized(a), normalized(b)), -1.0, 1.0);
  return rad2deg(std::acos(c));
}

/// Angle between the undirected lines spanned by two vectors, in [0, 90].
inline double line_angle_deg(Vec2 a, Vec2 b) {
  const double c = std::clamp(std::abs(dot(normalized(a), normalized(b))), 0.0, 1.0);
  return rad2deg(std::acos(c));
}

/// Signed area of a closed polygon; positive for counter-clockwise order.
inline double signed_area(std::span<const Vec2> poly) {
  double a = 0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline double perimeter(std::span<const Vec2> loop) {
  double p = 0;
  for (std::size_t i = 0, n = loop.size(); i < n; ++i) p += distance(loop[i], loop[(i + 1) % n]);
  return p;
}

inline Vec2 centroid(std::span<const Vec2> pts) {
  Vec2 c{};
  for (auto p : pts) c += p;
  return pts.empty() ? c : c / static_cast<double>(pts.size());
}

/// Proper or touching intersection of closed segments [a, b] and [c, d].
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  auto on_seg = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  if (d1 == 0 && on_seg(c, d, a)) return true;
  if (d2 == 0 && on_seg(c, d, b)) return true;
  if (d3 == 0 && on_seg(a, b, c)) return true;
  if (d4 == 0 && on_seg(a, b, d)) return true;
  return false;
}

/// Uniform bucket grid for fixed-radius neighbour queries.
class PointGrid {
 public:
  PointGrid(std::span<const Vec2> points, double cell) : points_(points.begin(), points.end()), cell_(cell) {
    for (std::size_t i = 0; i < points_.size(); ++i) buckets_[key(cell_of(points_[i].x), cell_of(points_[i].y))].push_back(i);
  }

  /// Indices of points within `radius` of `q`, in increasing index order.
  std::vector<std::size_t> within(Vec2 q, double radius) const {
    std::vector<std::size_t> out;
    const std::int64_t x0 = cell_of(q.x - radius), x1 = cell_of(q.x + radius);
    const std::int64_t y0 = cell_of(q.y - radius), y1 = cell_of(q.y + radius);
    const double r2 = radius * radius;
    for (std::int64_t cy = y0; cy <= y1; ++cy)
      for (std::int64_t cx = x0; cx <= x1; ++cx) {
        auto it = buckets_.find(key(cx, cy));
        if (it == buckets_.end()) continue;
        for (auto i : it->second)
          if (norm2(points_[i] - q) <= r2) out.push_back(i);
      }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Nearest point index, or size() when empty. Searches rings outward.
  std::size_t nearest(Vec2 q) const {
    if (points_.empty()) return 0;
    double radius = cell_;
    for (;;) {
      auto cand = within(q, radius);
      if (!cand.empty()) {
        std::size_t best = cand.front();
        for (auto i : cand)
          if (norm2(points_[i] - q) < norm2(points_[best] - q)) best = i;
        return best;
      }
      radius *= 2;
      if (radius > 1e12) return 0;
    }
  }

  std::size_t size() const { return points_.size(); }
  const Vec2& operator[](std::size_t i) const { return points_[i]; }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) | static_cast<std::uint32_t>(cy);
  }

  std::vector<Vec2> points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace slicereg
