#pragma once

// Exterior medial axis machinery: winding numbers, exterior / sliver
// filtering of a triangulation, its Voronoi dual, and chains of Voronoi
// edges that stay clear of the contour.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/cdt.hpp"
#include "slicereg/geom/hull.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

/// Winding number of `p` with respect to the closed polygon. Throws
/// OnBoundary when p lies on an edge.
inline int winding_number(Vec2 p, std::span<const Vec2> polygon) {
  int wn = 0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = polygon[i], b = polygon[(i + 1) % n];
    const double o = orient(a, b, p);
    if (o == 0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
        p.y <= std::max(a.y, b.y))
      throw Error(ErrorCode::OnBoundary, "point lies on the polygon boundary");
    if (a.y <= p.y) {
      if (b.y > p.y && o > 0) ++wn;
    } else if (b.y <= p.y && o < 0) {
      --wn;
    }
  }
  return wn;
}

inline Vec2 triangle_centroid(const Triangulation& t, const Tri& tri) {
  return (t.vertices[tri[0]] + t.vertices[tri[1]] + t.vertices[tri[2]]) / 3.0;
}

/// Indices of triangles whose centroid has winding number 0 with respect to
/// the contour (outside the tissue, inside the hull).
inline std::vector<std::size_t> exterior_triangle_ids(const Triangulation& tri, std::span<const Vec2> contour) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    int wn = 1;
    try {
      wn = winding_number(triangle_centroid(tri, tri.triangles[i]), contour);
    } catch (const Error&) {
      wn = 1;  // on the contour counts as inside
    }
    if (wn == 0) keep.push_back(i);
  }
  return keep;
}

inline Triangulation exterior_triangles(const Triangulation& tri, std::span<const Vec2> contour) {
  const auto keep = exterior_triangle_ids(tri, contour);
  return tri.subset(keep);
}

/// True when the triangle contains its own circumcenter, i.e. no angle
/// exceeds 90 degrees. Right triangles (circumcenter on an edge) count, with a
/// relative tolerance of 1e-9 on the angle cosines.
inline bool contains_circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  auto ok = [](Vec2 u, Vec2 v) { return dot(u, v) >= -1e-9 * norm(u) * norm(v); };
  return ok(b - a, c - a) && ok(a - b, c - b) && ok(a - c, b - c);
}

inline Triangulation remove_slivers(const Triangulation& tri) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    const auto& t = tri.triangles[i];
    if (contains_circumcenter(tri.vertices[t[0]], tri.vertices[t[1]], tri.vertices[t[2]])) keep.push_back(i);
  }
  return tri.subset(keep);
}

/// Keeps triangles whose circumcenter lies in the exterior region: outside the
/// contour (winding number 0) and inside its convex hull. Their Voronoi
/// vertices are the ones that belong to the exterior medial axis.
inline Triangulation keep_exterior_circumcenters(const Triangulation& tri, std::span<const Vec2> contour) {
  const auto hull = convex_hull(contour);
  auto in_hull = [&](Vec2 p) {
    for (std::size_t i = 0; i < hull.size(); ++i)
      if (orient(hull[i], hull[(i + 1) % hull.size()], p) < 0) return false;
    return true;
  };
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    const auto& t = tri.triangles[i];
    const Vec2 c = circumcenter(tri.vertices[t[0]], tri.vertices[t[1]], tri.vertices[t[2]]);
    if (!std::isfinite(c.x) || !std::isfinite(c.y) || !in_hull(c)) continue;
    try {
      if (winding_number(c, contour) == 0) keep.push_back(i);
    } catch (const Error&) {
    }
  }
  return tri.subset(keep);
}

struct VoronoiDiagram {
  std::vector<Vec2> voronoi_vertices;                // one circumcenter per triangle
  std::vector<std::array<int, 2>> voronoi_edges;     // triangle ids sharing a Delaunay edge
  std::vector<Edge> dual_of;                         // the shared Delaunay edge of each Voronoi edge
  Triangulation delaunay;
};

inline VoronoiDiagram voronoi_dual(const Triangulation& tri) {
  VoronoiDiagram vor;
  vor.delaunay = tri;
  std::map<Edge, int> first;
  for (std::size_t i = 0; i < tri.triangles.size(); ++i) {
    const auto& t = tri.triangles[i];
    vor.voronoi_vertices.push_back(circumcenter(tri.vertices[t[0]], tri.vertices[t[1]], tri.vertices[t[2]]));
    for (int k = 0; k < 3; ++k) {
      const Edge e{std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])};
      auto [it, inserted] = first.emplace(e, static_cast<int>(i));
      if (!inserted) {
        vor.voronoi_edges.push_back({it->second, static_cast<int>(i)});
        vor.dual_of.push_back(e);
      }
    }
  }
  return vor;
}

struct MedialChain {
  std::vector<std::size_t> edges;       // indices into VoronoiDiagram::voronoi_edges
  std::vector<int> triangles;           // triangle ids touched by the chain
  std::vector<int> delaunay_vertices;   // V': vertices of those triangles
  double length = 0;                    // geometric length of the chain
  std::size_t edge_count() const { return edges.size(); }
};

/// Connected groups of Voronoi edges that do not cross the constraint
/// segments, keeping those with at least `alpha` edges. Branching groups are
/// one chain whose size is its total edge count.
inline std::vector<MedialChain> medial_axis_chains(const VoronoiDiagram& vor, std::span<const Vec2> constraint_vertices,
                                                   std::span<const Edge> constraint_edges, std::size_t alpha) {
  const std::size_t nt = vor.voronoi_vertices.size();
  std::vector<int> parent(nt);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  // Constraint segments bucketed for the crossing test.
  PointGrid mids(
      [&] {
        std::vector<Vec2> m;
        for (const auto& e : constraint_edges) m.push_back(0.5 * (constraint_vertices[e[0]] + constraint_vertices[e[1]]));
        return m;
      }(),
      8.0);
  double max_half = 0;
  for (const auto& e : constraint_edges)
    max_half = std::max(max_half, 0.5 * distance(constraint_vertices[e[0]], constraint_vertices[e[1]]));

  auto crosses_constraint = [&](Vec2 a, Vec2 b) {
    const Vec2 m = 0.5 * (a + b);
    const double r = 0.5 * distance(a, b) + max_half + 1e-9;
    for (auto i : mids.within(m, r)) {
      const Vec2 c = constraint_vertices[constraint_edges[i][0]], d = constraint_vertices[constraint_edges[i][1]];
      const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
      if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    }
    return false;
  };

  std::vector<char> kept(vor.voronoi_edges.size(), 0);
  for (std::size_t i = 0; i < vor.voronoi_edges.size(); ++i) {
    const auto [t0, t1] = vor.voronoi_edges[i];
    if (crosses_constraint(vor.voronoi_vertices[t0], vor.voronoi_vertices[t1])) continue;
    kept[i] = 1;
    parent[find(t0)] = find(t1);
  }

  std::map<int, MedialChain> by_root;
  for (std::size_t i = 0; i < vor.voronoi_edges.size(); ++i) {
    if (!kept[i]) continue;
    const auto [t0, t1] = vor.voronoi_edges[i];
    auto& ch = by_root[find(t0)];
    ch.edges.push_back(i);
    ch.triangles.push_back(t0);
    ch.triangles.push_back(t1);
    ch.length += distance(vor.voronoi_vertices[t0], vor.voronoi_vertices[t1]);
  }
  std::vector<MedialChain> out;
  for (auto& [root, ch] : by_root) {
    if (ch.edge_count() < alpha || ch.edge_count() == 0) continue;
    std::sort(ch.triangles.begin(), ch.triangles.end());
    ch.triangles.erase(std::unique(ch.triangles.begin(), ch.triangles.end()), ch.triangles.end());
    for (int t : ch.triangles)
      for (int v : vor.delaunay.triangles[t]) ch.delaunay_vertices.push_back(v);
    std::sort(ch.delaunay_vertices.begin(), ch.delaunay_vertices.end());
    ch.delaunay_vertices.erase(std::unique(ch.delaunay_vertices.begin(), ch.delaunay_vertices.end()),
                               ch.delaunay_vertices.end());
    out.push_back(std::move(ch));
  }
  return out;
}

}  // namespace slicereg
