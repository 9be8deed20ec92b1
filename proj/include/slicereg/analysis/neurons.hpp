#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <vector>

#include "slicereg/annotation.hpp"
#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/raster.hpp"

namespace slicereg {

struct NeuronParams {
  int threshold = 255;   // red value that counts as labelled
  int min_cluster = 5;   // smaller components are discarded
};

struct NeuronCluster {
  std::size_t area = 0;
  Vec2 centroid;
  int multiplicity = 1;
  int region = 0;  // 0 when the centroid falls on background
};

struct NeuronCountReport {
  std::map<int, long> counts;  // region id -> neurons
  long unassigned = 0;
  double median_area = 0;
  std::size_t discarded = 0;
  std::vector<NeuronCluster> clusters;

  long total() const {
    long t = unassigned;
    for (const auto& [id, c] : counts) t += c;
    return t;
  }
};

/// 8-connected components of `mask` (row-major, width w), each as a pixel index list.
inline std::vector<std::vector<std::size_t>> connected_components(const std::vector<char>& mask, int w, int h) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<char> seen(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || seen[s]) continue;
    std::vector<std::size_t> comp;
    stack.assign(1, s);
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      comp.push_back(i);
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (mask[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

/// Counts saturated-red cell bodies per region. Components whose area is a
/// multiple of the median area are counted as that many (rounded up) cells.
inline NeuronCountReport count_neurons(const RasterImage& mi, const AnnotatedSliceImage& labels,
                                       const NeuronParams& p = {}) {
  if (mi.channels != 3) fail(ErrorCode::InvalidArgument, "neuron counting needs an RGB image");
  if (labels.width != mi.width || labels.height != mi.height)
    fail(ErrorCode::InvalidArgument, "label image does not match the microscope image");
  if (p.min_cluster < 1 || p.threshold < 0 || p.threshold > 255)
    fail(ErrorCode::InvalidArgument, "neuron parameters out of range");
  std::vector<char> mask(static_cast<std::size_t>(mi.width) * mi.height, 0);
  for (int y = 0; y < mi.height; ++y)
    for (int x = 0; x < mi.width; ++x) mask[static_cast<std::size_t>(y) * mi.width + x] = mi.at(x, y, 0) >= p.threshold;

  NeuronCountReport r;
  for (auto& comp : connected_components(mask, mi.width, mi.height)) {
    if (comp.size() < static_cast<std::size_t>(p.min_cluster)) {
      ++r.discarded;
      continue;
    }
    NeuronCluster c;
    c.area = comp.size();
    for (auto i : comp) c.centroid += Vec2{double(i % mi.width), double(i / mi.width)};
    c.centroid = c.centroid / double(c.area);
    const int cx = static_cast<int>(std::lround(c.centroid.x)), cy = static_cast<int>(std::lround(c.centroid.y));
    c.region = labels.at(cx, cy);
    r.clusters.push_back(c);
  }
  if (r.clusters.empty()) return r;

  std::vector<double> areas;
  for (const auto& c : r.clusters) areas.push_back(double(c.area));
  std::sort(areas.begin(), areas.end());
  const std::size_t n = areas.size();
  r.median_area = n % 2 ? areas[n / 2] : 0.5 * (areas[n / 2 - 1] + areas[n / 2]);
  for (auto& c : r.clusters) {
    c.multiplicity = std::max(1, static_cast<int>(std::ceil(double(c.area) / r.median_area)));
    if (c.region == 0)
      r.unassigned += c.multiplicity;
    else
      r.counts[c.region] += c.multiplicity;
  }
  return r;
}

inline nlohmann::json to_json(const NeuronCountReport& r, const RegionTable& regions = {}) {
  nlohmann::json j;
  auto counts = nlohmann::json::array();
  for (const auto& [id, c] : r.counts) {
    nlohmann::json e{{"region", id}, {"count", c}};
    if (auto it = regions.find(id); it != regions.end()) e["name"] = it->second.name;
    counts.push_back(e);
  }
  j["counts"] = counts;
  j["unassigned"] = r.unassigned;
  j["total"] = r.total();
  j["median_area"] = r.median_area;
  j["discarded"] = r.discarded;
  auto cl = nlohmann::json::array();
  for (const auto& c : r.clusters)
    cl.push_back({{"area", c.area}, {"centroid", {c.centroid.x, c.centroid.y}}, {"multiplicity", c.multiplicity},
                  {"region", c.region}});
  j["clusters"] = cl;
  return j;
}

}  // namespace slicereg
