#pragma once

#include <array>
#include <span>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/hull.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/reg/affine.hpp"
#include "slicereg/reg/correspondence.hpp"

namespace slicereg {

inline double mean_nearest_distance(std::span<const Vec2> from, const PointGrid& to) {
  if (from.empty() || to.size() == 0) return 0;
  double sum = 0;
  for (auto p : from) sum += distance(p, to[to.nearest(p)]);
  return sum / static_cast<double>(from.size());
}

/// Maps box `src` onto box `dst` with axis flips (f0, f1).
inline Affine2 obb_transform(const OrientedBox& src, const OrientedBox& dst, int f0, int f1) {
  const double s0 = src.half_extents[0] > 0 ? f0 * dst.half_extents[0] / src.half_extents[0] : f0;
  const double s1 = src.half_extents[1] > 0 ? f1 * dst.half_extents[1] / src.half_extents[1] : f1;
  const Affine2 to_src = Affine2::to_frame(src.center, src.axes[0], src.axes[1]);
  const Vec2 a0 = dst.axes[0], a1 = dst.axes[1];
  const Affine2 from_dst{{a0.x, a1.x, dst.center.x, a0.y, a1.y, dst.center.y}};
  return from_dst * Affine2::scaling(s0, s1) * to_src;
}

/// Translation, rotation and per-axis scale taking one box onto the other.
/// Of the four axis-sign choices the one with the smallest mean
/// nearest-neighbour distance from the mapped source points wins; ties go to
/// the earlier choice in the order (+,+), (-,-), (+,-), (-,+).
inline Affine2 coarse_align_obb(const OrientedBox& src, const OrientedBox& dst, std::span<const Vec2> src_pts,
                                std::span<const Vec2> dst_pts, double* chosen_distance = nullptr) {
  constexpr std::array<std::array<int, 2>, 4> flips{{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
  const PointGrid grid(dst_pts, 4.0);
  Affine2 best;
  double best_d = 0;
  std::vector<Vec2> moved(src_pts.size());
  for (std::size_t k = 0; k < flips.size(); ++k) {
    const Affine2 T = obb_transform(src, dst, flips[k][0], flips[k][1]);
    if (src_pts.empty() || dst_pts.empty()) return T;
    for (std::size_t i = 0; i < src_pts.size(); ++i) moved[i] = T(src_pts[i]);
    const double d = mean_nearest_distance(moved, grid);
    if (k == 0 || d < best_d - 1e-9) {
      best = T;
      best_d = d;
    }
  }
  if (chosen_distance) *chosen_distance = best_d;
  return best;
}

struct IcpStage {
  double angle_deg;
  double dist_fraction;  // of the image height
};

struct IcpParams {
  std::vector<IcpStage> schedule{{10, 1.0 / 10}, {8, 1.0 / 20}, {6, 1.0 / 40}, {4, 1.0 / 80}};
  int max_iterations = 10;  // per stage
  double min_improvement = 0.1;
  double consistency_radius = 15;
};

struct IcpIteration {
  int stage = 0;
  std::size_t pairs = 0;
  double residual = 0;  // mean |T(s) - t| after the fit
};

struct IcpResult {
  Affine2 transform;
  std::vector<IcpIteration> iterations;
  std::vector<double> stage_residuals;  // last accepted residual of each stage run
  int stages_run = 0;
  double final_residual = 0;
};

/// Thrown when a stage finds no correspondences; carries the last good transform.
class IcpStalledError : public Error {
 public:
  IcpStalledError(const std::string& what, Affine2 last, IcpResult partial)
      : Error(ErrorCode::IcpStalled, what), last_good(last), partial(std::move(partial)) {}
  Affine2 last_good;
  IcpResult partial;
};

/// Normal-guided ICP from MEI points to AEI points, starting at `initial`.
/// Each iteration matches under the current transform, filters, refits the
/// full affine map and keeps it only if the mean residual does not grow. A
/// stage ends when the residual improves by less than `min_improvement`; the
/// whole schedule ends early once the residual is below `min_improvement` and
/// a stage no longer improves it by that much.
inline IcpResult icp_register(std::span<const Vec2> mei, std::span<const Vec2> mei_normals, std::span<const Vec2> aei,
                              std::span<const Vec2> aei_normals, int image_height, const Affine2& initial,
                              const IcpParams& p = {}) {
  if (mei.size() != mei_normals.size()) fail(ErrorCode::InvalidArgument, "every MEI point needs a normal");
  IcpResult res;
  res.transform = initial;
  std::vector<Vec2> pts(mei.size()), nrm(mei.size());
  for (std::size_t s = 0; s < p.schedule.size(); ++s) {
    const auto& st = p.schedule[s];
    const double dist = st.dist_fraction * image_height;
    double last = -1;
    double first_before = -1;
    for (int it = 0; it < p.max_iterations; ++it) {
      for (std::size_t i = 0; i < mei.size(); ++i) {
        pts[i] = res.transform(mei[i]);
        nrm[i] = res.transform.transform_normal(mei_normals[i]);
      }
      CorrespondenceSet c;
      try {
        c = match_correspondences(pts, nrm, aei, aei_normals, st.angle_deg, dist);
      } catch (const Error&) {
        throw IcpStalledError("no correspondences in stage " + std::to_string(s + 1), res.transform, res);
      }
      c = neighborhood_consistency_filter(c, p.consistency_radius);
      if (c.size() < 3) throw IcpStalledError("too few consistent pairs in stage " + std::to_string(s + 1), res.transform, res);
      const double before = mean_residual(Affine2::identity(), c);
      if (it == 0) first_before = before;
      Affine2 step;
      try {
        step = fit_affine(c);
      } catch (const Error&) {
        throw IcpStalledError("degenerate fit in stage " + std::to_string(s + 1), res.transform, res);
      }
      const double r = mean_residual(step, c);
      if (last >= 0 && r > last) break;
      res.transform = step * res.transform;
      res.iterations.push_back({static_cast<int>(s) + 1, c.size(), r});
      const bool converged = last >= 0 && last - r < p.min_improvement;
      last = r;
      if (converged) break;
    }
    res.stages_run = static_cast<int>(s) + 1;
    const double reference = s == 0 ? first_before : res.stage_residuals.back();
    res.stage_residuals.push_back(last);
    res.final_residual = last;
    if (reference - last < p.min_improvement && last < p.min_improvement) break;
  }
  return res;
}

}  // namespace slicereg
