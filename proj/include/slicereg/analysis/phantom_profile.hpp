#pragma once

// Parameters tuned for 512 px phantoms, and the tear ground truth used to
// score damage detection on them.

#include <cmath>
#include <vector>

#include "slicereg/analysis/phantom.hpp"
#include "slicereg/damage.hpp"
#include "slicereg/edges.hpp"

namespace slicereg {

inline EdgeParams phantom_edge_params() {
  EdgeParams p;
  p.median_window = 5;
  p.gaussian_window = 7;
  p.gaussian_sigma = 1.5;
  p.bin_rule = BinRule::Width;
  return p;
}

inline DamageParams phantom_damage_params() {
  DamageParams p;
  p.close_iterations = 1;
  return p;
}

/// Indices of edge points within `radius` of a torn microscope pixel.
inline std::vector<std::size_t> tear_boundary_indices(const Phantom& ph, const EdgePointSet& edges,
                                                      double radius = 1.5) {
  std::vector<std::size_t> out;
  if (ph.tear_mask.empty()) return out;
  const int r = static_cast<int>(std::ceil(radius));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Vec2 p = edges.points[i];
    const int cx = static_cast<int>(std::lround(p.x)), cy = static_cast<int>(std::lround(p.y));
    bool hit = false;
    for (int dy = -r; dy <= r && !hit; ++dy)
      for (int dx = -r; dx <= r && !hit; ++dx) {
        const int x = cx + dx, y = cy + dy;
        hit = ph.mi.contains(x, y) && ph.torn(x, y) && std::hypot(x - p.x, y - p.y) <= radius;
      }
    if (hit) out.push_back(i);
  }
  return out;
}

}  // namespace slicereg
