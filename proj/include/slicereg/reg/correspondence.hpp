#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/reg/affine.hpp"

namespace slicereg {

/// Weight of a match at distance d.
inline double match_weight(double d) { return d == 0 ? 100.0 : 1.0 / d; }

/// For each source point, the weighted average of every target point within
/// `dist_max` whose (undirected) normal deviates at most `angle_max_deg`.
inline CorrespondenceSet match_correspondences(std::span<const Vec2> src, std::span<const Vec2> src_normals,
                                               std::span<const Vec2> dst, std::span<const Vec2> dst_normals,
                                               double angle_max_deg, double dist_max) {
  if (src.size() != src_normals.size() || dst.size() != dst_normals.size())
    fail(ErrorCode::InvalidArgument, "every point needs a normal");
  CorrespondenceSet out;
  if (!dst.empty() && dist_max > 0) {
    const PointGrid grid(dst, dist_max);
    for (std::size_t i = 0; i < src.size(); ++i) {
      Correspondence c{src[i], {}, {}};
      Vec2 acc{};
      double wsum = 0;
      for (auto j : grid.within(src[i], dist_max)) {
        if (line_angle_deg(src_normals[i], dst_normals[j]) > angle_max_deg) continue;
        const double d = distance(src[i], dst[j]);
        const double w = match_weight(d);
        acc += w * dst[j];
        wsum += w;
        c.match_distances.push_back(d);
      }
      if (wsum == 0) continue;
      c.target = acc / wsum;
      out.push_back(std::move(c));
    }
  }
  if (out.empty()) fail(ErrorCode::NoCorrespondences, "no source point has a match");
  return out;
}

namespace detail {

inline double median_of(std::vector<double> v) {
  const auto n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

}  // namespace detail

/// Drops pairs whose displacement disagrees with the median displacement of
/// the pairs around them by more than twice the neighbours' median absolute
/// deviation (at least `min_spread` px). Pairs with fewer than 3 neighbours
/// are kept.
inline CorrespondenceSet neighborhood_consistency_filter(const CorrespondenceSet& corrs, double radius,
                                                         double min_spread = 1.0) {
  if (corrs.empty()) return {};
  std::vector<Vec2> src;
  for (const auto& c : corrs) src.push_back(c.source);
  const PointGrid grid(src, std::max(radius, 1e-6));
  CorrespondenceSet out;
  std::vector<double> xs, ys, dev;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    xs.clear();
    ys.clear();
    std::vector<Vec2> disp;
    for (auto j : grid.within(src[i], radius)) {
      if (j == i) continue;
      disp.push_back(corrs[j].target - corrs[j].source);
    }
    if (disp.size() < 3) {
      out.push_back(corrs[i]);
      continue;
    }
    for (auto d : disp) {
      xs.push_back(d.x);
      ys.push_back(d.y);
    }
    const Vec2 med{detail::median_of(xs), detail::median_of(ys)};
    dev.clear();
    for (auto d : disp) dev.push_back(distance(d, med));
    const double spread = std::max(detail::median_of(dev), min_spread);
    if (distance(corrs[i].target - corrs[i].source, med) <= 2 * spread) out.push_back(corrs[i]);
  }
  return out;
}

/// Greedy thinning in input order: a pair is kept when no kept source lies
/// closer than `spacing`.
inline CorrespondenceSet thin_sources(const CorrespondenceSet& corrs, double spacing) {
  CorrespondenceSet out;
  std::unordered_map<std::uint64_t, std::vector<Vec2>> cells;
  auto cell = [&](double v) { return static_cast<std::int64_t>(std::floor(v / spacing)); };
  auto key = [](std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
  };
  for (const auto& c : corrs) {
    const auto cx = cell(c.source.x), cy = cell(c.source.y);
    bool clear = true;
    for (std::int64_t dy = -1; dy <= 1 && clear; ++dy)
      for (std::int64_t dx = -1; dx <= 1 && clear; ++dx) {
        auto it = cells.find(key(cx + dx, cy + dy));
        if (it == cells.end()) continue;
        for (auto q : it->second)
          if (distance(q, c.source) < spacing) clear = false;
      }
    if (!clear) continue;
    cells[key(cx, cy)].push_back(c.source);
    out.push_back(c);
  }
  return out;
}

struct FinalMatchParams {
  double dist_fraction = 1.0 / 40;  // of the image height
  double angle_deg = 1;
  double consistency_radius = 15;
  double min_spacing = 3;
};

/// Dense, strict correspondences after global alignment; they become the
/// Dirichlet pins of the non-linear warp.
inline CorrespondenceSet final_correspondences(std::span<const Vec2> mei_aligned, std::span<const Vec2> mei_normals,
                                               std::span<const Vec2> aei, std::span<const Vec2> aei_normals,
                                               int image_height, const FinalMatchParams& p = {}) {
  auto c = match_correspondences(mei_aligned, mei_normals, aei, aei_normals, p.angle_deg,
                                 p.dist_fraction * image_height);
  c = thin_sources(neighborhood_consistency_filter(c, p.consistency_radius), p.min_spacing);
  if (c.empty()) fail(ErrorCode::NoCorrespondences, "every final match was filtered out");
  return c;
}

}  // namespace slicereg
