#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "slicereg/annotation.hpp"
#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/parallel.hpp"
#include "slicereg/slicer/mesh.hpp"

namespace slicereg {

using Loop2 = std::vector<Vec2>;  // closed; last point connects to the first

/// Plane through `origin` with the fixed in-plane basis: u is +x projected
/// into the plane (+y when the normal is parallel to x), v = normal x u.
inline SlicePlane make_slice_plane(Vec3 origin, Vec3 normal, double pixel_pitch, int width, int height) {
  if (!(pixel_pitch > 0)) fail(ErrorCode::InvalidArgument, "pixel pitch must be positive");
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "slice dimensions must be positive");
  SlicePlane p;
  p.origin = origin;
  p.normal = normalized(normal);
  Vec3 ref{1, 0, 0};
  Vec3 u = ref - dot(ref, p.normal) * p.normal;
  if (norm(u) < 1e-6) {
    ref = {0, 1, 0};
    u = ref - dot(ref, p.normal) * p.normal;
  }
  p.u = normalized(u);
  p.v = cross(p.normal, p.u);
  p.pixel_pitch = pixel_pitch;
  p.width = width;
  p.height = height;
  return p;
}

/// In-plane micrometer coordinates of a 3D point.
inline Vec2 plane_coords(const SlicePlane& plane, Vec3 p) {
  const Vec3 d = p - plane.origin;
  return {dot(d, plane.u), dot(d, plane.v)};
}

/// Pixel coordinates of an in-plane point; pixel centers are integers and
/// the origin sits at the image center.
inline Vec2 plane_to_pixel(const SlicePlane& plane, Vec2 uv) {
  return {uv.x / plane.pixel_pitch + (plane.width - 1) / 2.0, uv.y / plane.pixel_pitch + (plane.height - 1) / 2.0};
}

struct SliceStats {
  std::size_t segments = 0;
  double offset_shift = 0;  // plane shift applied to move vertices off the plane
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

inline void slice_triangles(const LabeledMesh& mesh, const std::vector<std::size_t>& tris, const SlicePlane& plane,
                            std::vector<Loop2>& loops, SliceStats& stats) {
  std::unordered_map<int, double> sd;
  for (auto t : tris)
    for (int i : mesh.triangles[t])
      if (!sd.count(i)) sd[i] = dot(mesh.vertices[i] - plane.origin, plane.normal);
  // Vertices exactly on the plane: shift the plane by +1e-9 until none are.
  double shift = 0;
  for (int round = 0; round < 64; ++round) {
    bool touching = false;
    for (const auto& [i, s] : sd)
      if (s - shift == 0) touching = true;
    if (!touching) break;
    shift += 1e-9;
  }
  stats.offset_shift = shift;

  struct Segment {
    std::uint64_t key[2];
    Vec2 pt[2];
    Vec2 dir;  // in-plane direction implied by the triangle orientation
  };
  std::vector<Segment> segs;
  auto cut = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    const double sa = sd[a] - shift, sb = sd[b] - shift;
    const double t = sa / (sa - sb);
    const Vec3 p = mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a]);
    return plane_coords(plane, p);
  };
  for (auto t : tris) {
    const auto& tri = mesh.triangles[t];
    Segment s{};
    int found = 0;
    for (int k = 0; k < 3 && found < 2; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if ((sd[a] - shift > 0) == (sd[b] - shift > 0)) continue;
      s.key[found] = edge_key(a, b);
      s.pt[found] = cut(a, b);
      ++found;
    }
    if (found != 2) continue;
    const Vec3 n = cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]], mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    const Vec3 d3 = cross(plane.normal, n);
    s.dir = {dot(d3, plane.u), dot(d3, plane.v)};
    segs.push_back(s);
  }
  stats.segments += segs.size();

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> at;
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (auto k : segs[i].key) at[k].push_back(i);
  for (const auto& [k, v] : at)
    if (v.size() != 2) fail(ErrorCode::NonManifoldRegion, "slice contour does not close (mesh edge used by " +
                                                             std::to_string(v.size()) + " crossing triangles)");

  std::vector<char> used(segs.size(), 0);
  for (std::size_t start = 0; start < segs.size(); ++start) {
    if (used[start]) continue;
    Loop2 loop;
    double agree = 0;
    std::size_t cur = start;
    int entry = 0;  // endpoint index through which we entered `cur`
    while (!used[cur]) {
      used[cur] = 1;
      const auto& s = segs[cur];
      loop.push_back(s.pt[entry]);
      agree += dot(s.pt[1 - entry] - s.pt[entry], s.dir);
      const auto& pair = at[s.key[1 - entry]];
      const std::size_t next = pair[0] == cur ? pair[1] : pair[0];
      entry = segs[next].key[0] == s.key[1 - entry] ? 0 : 1;
      cur = next;
    }
    if (cur != start) fail(ErrorCode::NonManifoldRegion, "slice contour does not close");
    if (agree < 0) std::reverse(loop.begin(), loop.end());
    loops.push_back(std::move(loop));
  }
}

}  // namespace detail

/// Closed intersection loops of one region with the plane, in in-plane
/// micrometer coordinates. Loops follow the mesh orientation, so an
/// outward-oriented surface gives counter-clockwise outer loops.
inline std::vector<Loop2> slice_region(const LabeledMesh& mesh, int region, const SlicePlane& plane,
                                       SliceStats* stats = nullptr) {
  if (!mesh.regions.count(region)) fail(ErrorCode::InvalidArgument, "unknown region " + std::to_string(region));
  std::vector<std::size_t> tris;
  for (std::size_t t = 0; t < mesh.size(); ++t)
    if (mesh.region_of[t] == region) tris.push_back(t);
  std::vector<Loop2> loops;
  SliceStats local;
  detail::slice_triangles(mesh, tris, plane, loops, local);
  if (stats) *stats = local;
  return loops;
}

/// Pixel centers inside `loops` under the even-odd rule, as a row-major mask.
inline std::vector<char> fill_loops(const std::vector<Loop2>& loops, const SlicePlane& plane) {
  const int w = plane.width, h = plane.height;
  std::vector<char> mask(static_cast<std::size_t>(w) * h, 0);
  std::vector<Loop2> px;
  for (const auto& l : loops) {
    Loop2 q;
    for (auto p : l) q.push_back(plane_to_pixel(plane, p));
    px.push_back(std::move(q));
  }
  std::vector<double> xs;
  for (int y = 0; y < h; ++y) {
    xs.clear();
    for (const auto& l : px)
      for (std::size_t i = 0; i < l.size(); ++i) {
        const Vec2 a = l[i], b = l[(i + 1) % l.size()];
        if ((a.y > y) != (b.y > y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel x is inside when x0 <= x < x1.
      const int lo = static_cast<int>(std::clamp(std::ceil(xs[k]), 0.0, double(w)));
      const int hi = static_cast<int>(std::clamp(std::ceil(xs[k + 1]), 0.0, double(w)));
      for (int x = lo; x < hi; ++x) mask[static_cast<std::size_t>(y) * w + x] = 1;
    }
  }
  return mask;
}

/// Paints every region's loops; larger regions first so nested ones end on top.
inline AnnotatedSliceImage rasterize_annotation(const std::map<int, std::vector<Loop2>>& loops_by_region,
                                                const SlicePlane& plane, const RegionTable& regions = {}) {
  AnnotatedSliceImage img(plane.width, plane.height);
  img.regions = regions;
  img.provenance = plane;
  struct Fill {
    int id;
    std::size_t area;
    std::vector<char> mask;
  };
  std::vector<Fill> fills;
  for (const auto& [id, loops] : loops_by_region) {
    if (loops.empty()) continue;
    if (!img.regions.count(id)) img.regions[id] = {id, "region_" + std::to_string(id), {255, 255, 255}};
    auto mask = fill_loops(loops, plane);
    const auto area = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    if (area) fills.push_back({id, area, std::move(mask)});
  }
  std::stable_sort(fills.begin(), fills.end(), [](const Fill& a, const Fill& b) { return a.area > b.area; });
  for (const auto& f : fills)
    for (std::size_t i = 0; i < f.mask.size(); ++i)
      if (f.mask[i]) img.labels[i] = f.id;
  return img;
}

/// All regions of the mesh sliced by one plane.
inline AnnotatedSliceImage slice_annotation(const LabeledMesh& mesh, const SlicePlane& plane) {
  std::map<int, std::vector<std::size_t>> tris;
  for (std::size_t t = 0; t < mesh.size(); ++t) tris[mesh.region_of[t]].push_back(t);
  std::map<int, std::vector<Loop2>> loops;
  for (const auto& [id, ts] : tris) {
    SliceStats st;
    detail::slice_triangles(mesh, ts, plane, loops[id], st);
  }
  return rasterize_annotation(loops, plane, mesh.regions);
}

struct SeriesSpec {
  Vec3 direction{0, 0, 1};
  double interval = 25;  // micrometers between planes
  double start = 0;      // offset of the first plane from the origin
  int count = 1;
  std::optional<Vec3> origin;  // defaults to the center of the mesh bounds
  double pixel_pitch = 1;
  int width = 0;  // 0 sizes the image to the mesh bounds
  int height = 0;
};

/// Planes of a series: origin + (start + i * interval) * direction.
inline std::vector<SlicePlane> series_planes(const LabeledMesh& mesh, const SeriesSpec& s) {
  if (!(s.interval > 0)) fail(ErrorCode::InvalidArgument, "slice interval must be positive");
  if (s.count < 1) fail(ErrorCode::InvalidArgument, "slice count must be at least 1");
  const auto [lo, hi] = mesh.bounds();
  const Vec3 origin = s.origin ? *s.origin : 0.5 * (lo + hi);
  const int auto_dim = static_cast<int>(std::ceil(norm(hi - lo) / s.pixel_pitch)) + 2;
  const int w = s.width > 0 ? s.width : auto_dim, h = s.height > 0 ? s.height : auto_dim;
  const Vec3 dir = normalized(s.direction);
  std::vector<SlicePlane> planes;
  for (int i = 0; i < s.count; ++i)
    planes.push_back(make_slice_plane(origin + (s.start + i * s.interval) * dir, dir, s.pixel_pitch, w, h));
  return planes;
}

/// One annotated image per plane of the series, computed on `jobs` threads.
inline std::vector<AnnotatedSliceImage> slice_series(const LabeledMesh& mesh, const SeriesSpec& spec, int jobs = 1) {
  mesh.validate();
  const auto planes = series_planes(mesh, spec);
  std::vector<AnnotatedSliceImage> out(planes.size());
  parallel_for(planes.size(), jobs, [&](std::size_t i) { out[i] = slice_annotation(mesh, planes[i]); });
  return out;
}

}  // namespace slicereg
