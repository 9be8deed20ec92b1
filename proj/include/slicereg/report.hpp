#pragma once

// JSON views of pipeline results.

#include <nlohmann/json.hpp>

#include "slicereg/analysis/metrics.hpp"
#include "slicereg/damage.hpp"
#include "slicereg/edges.hpp"
#include "slicereg/reg/register.hpp"
#include "slicereg/slicer/slicer.hpp"

namespace slicereg {

inline nlohmann::json to_json(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }
inline nlohmann::json to_json(Vec3 p) { return nlohmann::json::array({p.x, p.y, p.z}); }

inline nlohmann::json to_json(const Affine2& a) {
  return nlohmann::json::array({nlohmann::json::array({a.m[0], a.m[1], a.m[2]}),
                                nlohmann::json::array({a.m[3], a.m[4], a.m[5]})});
}

inline nlohmann::json to_json(const DedDiagnostics& d) {
  return {{"threshold", d.threshold},   {"bins", d.bins},         {"stable_bins", d.stable_bins},
          {"run_start", d.run_start},   {"stability", d.stability}, {"otsu_fallback", d.otsu_fallback}};
}

inline nlohmann::json to_json(const EdgePointSet& e) {
  auto pts = nlohmann::json::array();
  for (std::size_t i = 0; i < e.size(); ++i) {
    nlohmann::json p{{"x", e.points[i].x}, {"y", e.points[i].y}, {"nx", e.normals[i].x}, {"ny", e.normals[i].y}};
    if (!e.contour_id.empty()) p["contour"] = e.contour_id[i];
    pts.push_back(std::move(p));
  }
  return pts;
}

inline nlohmann::json to_json(const OrientedBox& b) {
  return {{"center", to_json(b.center)},
          {"axes", nlohmann::json::array({to_json(b.axes[0]), to_json(b.axes[1])})},
          {"half_extents", nlohmann::json::array({b.half_extents[0], b.half_extents[1]})}};
}

inline nlohmann::json to_json(const DamageReport& r) {
  nlohmann::json j;
  j["damaged_indices"] = r.damaged_indices;
  auto pts = nlohmann::json::array();
  for (auto p : r.damaged_points) pts.push_back(to_json(p));
  j["damaged_points"] = pts;
  auto chains = nlohmann::json::array();
  for (const auto& c : r.chains)
    chains.push_back({{"voronoi_edges", c.chain.edge_count()},
                      {"length", c.chain.length},
                      {"candidates", c.candidates.size()},
                      {"asymmetric", c.asymmetric},
                      {"damage", c.damage}});
  j["chains"] = chains;
  j["obb"] = to_json(r.obb);
  j["contour_points"] = r.contour.size();
  return j;
}

inline nlohmann::json to_json(const ErrorSummary& s) { return {{"rmse", s.rmse}, {"mee", s.mee}, {"mae", s.mae}}; }

inline nlohmann::json to_json(const SlicePlane& p) {
  return {{"origin", to_json(p.origin)}, {"normal", to_json(p.normal)}, {"u", to_json(p.u)},
          {"v", to_json(p.v)},           {"pixel_pitch", p.pixel_pitch}, {"width", p.width},
          {"height", p.height}};
}

inline nlohmann::json to_json(const RegistrationResult& r) {
  const auto& d = r.diagnostics;
  nlohmann::json j;
  j["affine"] = to_json(r.affine);
  j["edges"] = to_json(d.edges);
  j["mei_points"] = d.mei_points;
  j["aei_points"] = d.aei_points;
  j["removed_points"] = d.removed_points;
  if (d.damage) j["damage"] = to_json(*d.damage);
  j["mei_obb"] = to_json(d.mei_obb);
  j["aei_obb"] = to_json(d.aei_obb);
  j["coarse"] = to_json(d.coarse);
  auto its = nlohmann::json::array();
  for (const auto& it : d.icp.iterations) its.push_back({{"stage", it.stage}, {"pairs", it.pairs}, {"residual", it.residual}});
  j["icp"] = {{"stages_run", d.icp.stages_run},
              {"stage_residuals", d.icp.stage_residuals},
              {"final_residual", d.icp.final_residual},
              {"iterations", its}};
  j["final_pairs"] = d.final_pairs;
  j["final_mean_displacement"] = d.final_mean_displacement;
  j["laplace"] = {{"iterations_x", d.laplace.iterations_x},
                  {"iterations_y", d.laplace.iterations_y},
                  {"pinned_nodes", d.laplace.pinned_nodes},
                  {"free_nodes", d.laplace.free_nodes}};
  j["field"] = {{"width", r.field.width}, {"height", r.field.height}, {"grid_factor", r.field.grid_factor}};
  return j;
}

}  // namespace slicereg
