#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

/// x' = m[0] x + m[1] y + m[2],  y' = m[3] x + m[4] y + m[5].
struct Affine2 {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};

  static Affine2 identity() { return {}; }
  static Affine2 translation(Vec2 t) { return {{1, 0, t.x, 0, 1, t.y}}; }
  static Affine2 rotation(double radians, Vec2 about = {}) {
    const double c = std::cos(radians), s = std::sin(radians);
    return translation(about) * Affine2{{c, -s, 0, s, c, 0}} * translation(-about);
  }
  static Affine2 scaling(double sx, double sy) { return {{sx, 0, 0, 0, sy, 0}}; }
  /// Maps the orthonormal frame (origin, e0, e1) to world axes, i.e. world -> frame coordinates.
  static Affine2 to_frame(Vec2 origin, Vec2 e0, Vec2 e1) {
    return {{e0.x, e0.y, -dot(origin, e0), e1.x, e1.y, -dot(origin, e1)}};
  }

  Vec2 operator()(Vec2 p) const { return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]}; }
  Vec2 linear(Vec2 v) const { return {m[0] * v.x + m[1] * v.y, m[3] * v.x + m[4] * v.y}; }
  double det() const { return m[0] * m[4] - m[1] * m[3]; }

  /// Unit normal after the transform (inverse-transpose of the linear part).
  Vec2 transform_normal(Vec2 n) const {
    return normalized(Vec2{m[4] * n.x - m[3] * n.y, -m[1] * n.x + m[0] * n.y});
  }

  Affine2 inverse() const {
    const double d = det();
    const double scale = std::abs(m[0]) + std::abs(m[1]) + std::abs(m[3]) + std::abs(m[4]);
    if (!(std::abs(d) > 1e-12 * scale * scale)) fail(ErrorCode::DegenerateSystem, "affine transform is singular");
    const double a = m[4] / d, b = -m[1] / d, c = -m[3] / d, e = m[0] / d;
    return {{a, b, -(a * m[2] + b * m[5]), c, e, -(c * m[2] + e * m[5])}};
  }

  /// (A * B)(p) = A(B(p)).
  friend Affine2 operator*(const Affine2& A, const Affine2& B) {
    const auto& a = A.m;
    const auto& b = B.m;
    return {{a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4], a[0] * b[2] + a[1] * b[5] + a[2],
             a[3] * b[0] + a[4] * b[3], a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]}};
  }

  double max_abs_diff(const Affine2& o) const {
    double d = 0;
    for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(m[i] - o.m[i]));
    return d;
  }

  friend bool operator==(const Affine2&, const Affine2&) = default;
};

struct Correspondence {
  Vec2 source;
  Vec2 target;
  std::vector<double> match_distances;  // d_ma of every candidate averaged into the target
};

using CorrespondenceSet = std::vector<Correspondence>;

/// Least-squares affine map from sources to targets (column-pivoted QR on
/// centered coordinates).
inline Affine2 fit_affine(std::span<const Vec2> src, std::span<const Vec2> dst) {
  const auto n = src.size();
  if (n != dst.size()) fail(ErrorCode::InvalidArgument, "source and target counts differ");
  if (n < 3) fail(ErrorCode::DegenerateSystem, "need at least 3 correspondences");
  const Vec2 cs = centroid(src), cd = centroid(dst);
  Eigen::MatrixXd A(n, 2);
  Eigen::MatrixXd B(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = src[i].x - cs.x;
    A(i, 1) = src[i].y - cs.y;
    B(i, 0) = dst[i].x - cd.x;
    B(i, 1) = dst[i].y - cd.y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const double spread = A.cwiseAbs().maxCoeff();
  qr.setThreshold(1e-10);
  if (!(spread > 0) || qr.rank() < 2) fail(ErrorCode::DegenerateSystem, "sources are collinear");
  const Eigen::MatrixXd X = qr.solve(B);  // rows: x, y; columns: x', y'
  Affine2 T{{X(0, 0), X(1, 0), 0, X(0, 1), X(1, 1), 0}};
  const Vec2 t = cd - T.linear(cs);
  T.m[2] = t.x;
  T.m[5] = t.y;
  return T;
}

inline Affine2 fit_affine(const CorrespondenceSet& corrs) {
  std::vector<Vec2> s, d;
  s.reserve(corrs.size());
  d.reserve(corrs.size());
  for (const auto& c : corrs) {
    s.push_back(c.source);
    d.push_back(c.target);
  }
  return fit_affine(s, d);
}

inline double mean_residual(const Affine2& T, const CorrespondenceSet& corrs) {
  if (corrs.empty()) return 0;
  double sum = 0;
  for (const auto& c : corrs) sum += distance(T(c.source), c.target);
  return sum / static_cast<double>(corrs.size());
}

}  // namespace slicereg
