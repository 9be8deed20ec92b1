#pragma once

// End-to-end slice registration: edges of both images, damage removal,
// OBB coarse alignment, normal-guided ICP, then a Laplace warp pinned at
// strict final correspondences.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slicereg/annotation.hpp"
#include "slicereg/damage.hpp"
#include "slicereg/edges.hpp"
#include "slicereg/error.hpp"
#include "slicereg/geom/hull.hpp"
#include "slicereg/raster.hpp"
#include "slicereg/reg/affine.hpp"
#include "slicereg/reg/correspondence.hpp"
#include "slicereg/reg/field.hpp"
#include "slicereg/reg/icp.hpp"
#include "slicereg/reg/laplace.hpp"
#include "slicereg/reg/warp.hpp"

namespace slicereg {

struct RegistrationParams {
  EdgeParams edges;
  double atlas_normal_radius = 6;
  double mei_normal_radius = 4;  // MLS normals per edge component, oriented by the gradient; 0 keeps the gradient normals
  DamageParams damage;
  bool remove_damage = true;
  IcpParams icp;
  FinalMatchParams final_match;
  int grid_factor = 8;
  LaplaceOptions laplace;
};

struct RegistrationDiagnostics {
  DedDiagnostics edges;
  std::size_t mei_points = 0;
  std::size_t aei_points = 0;
  std::optional<DamageReport> damage;
  std::size_t removed_points = 0;
  OrientedBox mei_obb, aei_obb;
  Affine2 coarse;
  IcpResult icp;
  std::size_t final_pairs = 0;
  double final_mean_displacement = 0;
  LaplaceStats laplace;
};

struct RegistrationResult {
  Affine2 affine;           // microscope -> atlas
  DisplacementField field;  // on the atlas grid; atlas p = affine(q) + field(p)
  RasterImage warped;       // microscope image resampled onto the atlas grid
  RegistrationDiagnostics diagnostics;
  CorrespondenceSet final_pairs;

  /// Atlas position of microscope point q.
  Vec2 to_atlas(Vec2 q) const { return forward_map(q, affine, field); }
};

/// Replaces the normals of every edge component by MLS normals over that
/// component, keeping the original orientation.
inline void smooth_normals(EdgePointSet& e, double radius) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < e.size(); ++i) groups[e.contour_id.empty() ? 0 : e.contour_id[i]].push_back(i);
  for (const auto& [id, idx] : groups) {
    std::vector<Vec2> pts, ref;
    for (auto i : idx) {
      pts.push_back(e.points[i]);
      ref.push_back(e.normals[i]);
    }
    const auto est = mls_normals(pts, radius, ref);
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (est.valid[k]) e.normals[idx[k]] = est.normals[k];
  }
}

namespace detail {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace detail

inline RegistrationResult register_slice(const RasterImage& mi, const AnnotatedSliceImage& ai,
                                         const RegistrationParams& p = {}) {
  RegistrationResult out;
  auto& diag = out.diagnostics;

  const auto det = detail::staged("edges", [&] { return detect_edges(mi, p.edges); });
  diag.edges = det.diagnostics;
  diag.mei_points = det.edges.size();
  if (det.edges.empty()) throw Error(ErrorCode::NoTissueFound, "no edges in the microscope image", "edges");

  const auto aei = detail::staged("atlas_edges", [&] { return atlas_edges(ai, p.atlas_normal_radius); });
  diag.aei_points = aei.size();
  if (aei.empty()) throw Error(ErrorCode::NoTissueFound, "atlas image has a single label", "atlas_edges");

  diag.mei_obb = detail::staged("obb", [&] { return obb_from_points(det.edges.points); });
  diag.aei_obb = detail::staged("obb", [&] { return obb_from_points(aei.points); });

  EdgePointSet mei = det.edges;
  if (p.mei_normal_radius > 0) smooth_normals(mei, p.mei_normal_radius);
  if (p.remove_damage) {
    diag.damage = detail::staged("damage", [&] { return detect_damage(det.edges, mi.width, mi.height, p.damage); });
    std::vector<char> drop(mei.size(), 0);
    for (auto i : diag.damage->damaged_indices) drop[i] = 1;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < drop.size(); ++i)
      if (!drop[i]) keep.push_back(i);
    mei = mei.select(keep);
    diag.removed_points = det.edges.size() - mei.size();
  }

  diag.coarse = detail::staged("coarse_align", [&] {
    return coarse_align_obb(diag.mei_obb, diag.aei_obb, mei.points, aei.points);
  });
  diag.icp = detail::staged("icp", [&] {
    return icp_register(mei.points, mei.normals, aei.points, aei.normals, ai.height, diag.coarse, p.icp);
  });
  out.affine = diag.icp.transform;

  std::vector<Vec2> moved(mei.size()), moved_n(mei.size());
  for (std::size_t i = 0; i < mei.size(); ++i) {
    moved[i] = out.affine(mei.points[i]);
    moved_n[i] = out.affine.transform_normal(mei.normals[i]);
  }
  out.final_pairs = detail::staged("final_correspondences", [&] {
    return final_correspondences(moved, moved_n, aei.points, aei.normals, ai.height, p.final_match);
  });
  diag.final_pairs = out.final_pairs.size();

  std::vector<DirichletPin> pins;
  for (const auto& c : out.final_pairs) {
    pins.push_back({c.target, c.target - c.source});
    diag.final_mean_displacement += distance(c.target, c.source);
  }
  diag.final_mean_displacement /= static_cast<double>(pins.size());
  out.field = detail::staged("laplace", [&] {
    return solve_laplace_warp(ai.width, ai.height, p.grid_factor, pins, p.laplace, &diag.laplace);
  });
  out.warped = detail::staged("warp", [&] { return apply_warp(mi, out.affine, out.field); });
  return out;
}

}  // namespace slicereg
