#pragma once

// Damaged-region detection: deep concavities of the outer tissue contour are
// found as long exterior medial-axis chains, and a concavity counts as damage
// when its mirror image across the slice's symmetry axis has no matching
// edges.

#include <algorithm>
#include <span>
#include <vector>

#include "slicereg/edges.hpp"
#include "slicereg/error.hpp"
#include "slicereg/geom/cdt.hpp"
#include "slicereg/geom/hull.hpp"
#include "slicereg/geom/medial.hpp"
#include "slicereg/geom/mls.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

enum class SliverRule {
  Triangle,        // drop triangles that do not contain their circumcenter
  ExteriorRegion,  // drop triangles whose circumcenter is not in the exterior region
};

struct DamageParams {
  std::size_t alpha = 20;        // minimum chain size in Voronoi edges
  double angle_deg = 20;         // normal similarity for a mirrored match
  double neighborhood = 3;       // side of the square searched around a reflection, px
  int symmetry_axis = 0;         // 0: OBB major axis, 1: minor axis
  double contour_spacing = 0;    // resample the traced contour at this arc length (0 keeps it)
  double candidate_radius = 2;   // edge points this close to a chain vertex are its candidates
  double damage_fraction = 0.5;  // a chain is damage when more than this share is asymmetric
  int close_iterations = 2;
  double mls_radius = 4;         // normals for point sets that carry none
  SliverRule sliver_rule = SliverRule::ExteriorRegion;
};

struct ChainVerdict {
  MedialChain chain;
  std::vector<std::size_t> candidates;  // indices into the edge set
  std::size_t asymmetric = 0;
  bool damage = false;
};

struct DamageReport {
  std::vector<std::size_t> damaged_indices;  // sorted, into the input edge set
  std::vector<Vec2> damaged_points;
  std::vector<ChainVerdict> chains;
  OrientedBox obb;
  std::vector<Vec2> contour;
};

/// Candidates whose mirror image has no reference point within the square
/// neighbourhood carrying a normal within `angle_deg` of the mirrored normal.
inline std::vector<char> symmetry_check(std::span<const Vec2> cand_pts, std::span<const Vec2> cand_normals,
                                        std::span<const Vec2> ref_pts, std::span<const Vec2> ref_normals,
                                        const OrientedBox& obb, double angle_deg = 20, double neighborhood = 3,
                                        int axis = 0) {
  const double half = 0.5 * neighborhood;
  const PointGrid grid(ref_pts, std::max(1.0, neighborhood));
  std::vector<char> asym(cand_pts.size(), 1);
  for (std::size_t i = 0; i < cand_pts.size(); ++i) {
    const Vec2 r = obb.reflect(cand_pts[i], axis);
    const Vec2 rn = obb.reflect_direction(cand_normals[i], axis);
    for (auto j : grid.within(r, half * std::numbers::sqrt2 + 1e-9)) {
      const Vec2 d = ref_pts[j] - r;
      if (std::abs(d.x) > half || std::abs(d.y) > half) continue;
      if (angle_between_deg(ref_normals[j], rn) <= angle_deg) {
        asym[i] = 0;
        break;
      }
    }
  }
  return asym;
}

inline DamageReport detect_damage(const EdgePointSet& mei, int width, int height, const DamageParams& p = {}) {
  if (mei.empty()) fail(ErrorCode::NoTissueFound, "empty edge set");
  DamageReport rep;
  const auto outer = outermost_contour(mei, width, height, p.close_iterations);
  rep.contour = p.contour_spacing > 0 ? resample_polyline(outer.points, p.contour_spacing) : outer.points;
  rep.obb = obb_from_points(mei.points);

  std::vector<Vec2> normals = mei.normals;
  if (!mei.has_normals()) {
    const auto est = mls_normals(mei.points, p.mls_radius);
    normals = est.normals;
  }

  const auto edges = polygon_edges(rep.contour.size());
  const auto tri = constrained_delaunay(rep.contour, edges);
  const auto ext = exterior_triangles(tri, rep.contour);
  const auto vor = voronoi_dual(p.sliver_rule == SliverRule::Triangle ? remove_slivers(ext)
                                                                       : keep_exterior_circumcenters(ext, rep.contour));
  const auto chains = medial_axis_chains(vor, rep.contour, edges, p.alpha);

  const PointGrid grid(mei.points, std::max(1.0, p.candidate_radius));
  std::vector<char> damaged(mei.size(), 0);
  for (const auto& ch : chains) {
    ChainVerdict v;
    v.chain = ch;
    for (int vi : ch.delaunay_vertices)
      for (auto j : grid.within(tri.vertices[vi], p.candidate_radius)) v.candidates.push_back(j);
    std::sort(v.candidates.begin(), v.candidates.end());
    v.candidates.erase(std::unique(v.candidates.begin(), v.candidates.end()), v.candidates.end());
    std::vector<Vec2> cp, cn;
    for (auto j : v.candidates) {
      cp.push_back(mei.points[j]);
      cn.push_back(normals[j]);
    }
    const auto asym = symmetry_check(cp, cn, mei.points, normals, rep.obb, p.angle_deg, p.neighborhood, p.symmetry_axis);
    for (char a : asym) v.asymmetric += a != 0;
    v.damage = !v.candidates.empty() &&
               static_cast<double>(v.asymmetric) > p.damage_fraction * static_cast<double>(v.candidates.size());
    if (v.damage)
      for (auto j : v.candidates) damaged[j] = 1;
    rep.chains.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < damaged.size(); ++i)
    if (damaged[i]) {
      rep.damaged_indices.push_back(i);
      rep.damaged_points.push_back(mei.points[i]);
    }
  return rep;
}

}  // namespace slicereg
