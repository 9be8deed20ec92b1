#pragma once

// Constrained Delaunay triangulation of a planar point set.
//
// Points are inserted incrementally into a bounding super-triangle with
// Lawson flips. Convex-hull edges and the caller's constraint edges are then
// forced in by flipping away crossing edges, everything outside the hull is
// discarded, and a final Lawson sweep restores the constrained Delaunay
// property. Cocircular ties resolve toward the diagonal with the smaller
// (min, max) vertex pair so the output is deterministic.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/hull.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

using Tri = std::array<int, 3>;
using Edge = std::array<int, 2>;

struct Triangulation {
  std::vector<Vec2> vertices;
  std::vector<Tri> triangles;  // counter-clockwise
  std::vector<Edge> constrained_edges;

  /// Undirected edges, each once with e[0] < e[1], sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (const auto& t : triangles)
      for (int i = 0; i < 3; ++i) out.push_back({std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3])});
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Triangulation subset(std::span<const std::size_t> keep) const {
    Triangulation out{vertices, {}, constrained_edges};
    for (auto i : keep) out.triangles.push_back(triangles[i]);
    return out;
  }
};

/// > 0 when d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
inline double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

inline Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2 * cross(ab, ac);
  const double ab2 = norm2(ab), ac2 = norm2(ac);
  return a + Vec2{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
}

namespace detail {

class CdtBuilder {
 public:
  explicit CdtBuilder(std::vector<Vec2> pts) : v_(std::move(pts)), n_input_(static_cast<int>(v_.size())) {
    double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
    for (auto p : v_) {
      minx = std::min(minx, p.x); maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y); maxy = std::max(maxy, p.y);
    }
    const Vec2 c{0.5 * (minx + maxx), 0.5 * (miny + maxy)};
    const double m = std::max({maxx - minx, maxy - miny, 1.0});
    v_.push_back({c.x - 30 * m, c.y - 30 * m});
    v_.push_back({c.x + 30 * m, c.y - 30 * m});
    v_.push_back({c.x, c.y + 30 * m});
    vert_edge_.assign(v_.size(), -1);
    add_tri(n_input_, n_input_ + 1, n_input_ + 2);
  }

  void insert_all() {
    for (int i = 0; i < n_input_; ++i) insert_point(i);
  }

  void insert_constraint(int a, int b, bool user) {
    if (a == b) return;
    if (user) user_constraints_.insert(ukey(a, b));
    if (has_edge(a, b)) {
      fixed_.insert(ukey(a, b));
      return;
    }
    std::deque<Edge> crossing;
    const int split = collect_crossings(a, b, crossing);
    if (split >= 0) {
      insert_constraint(a, split, user);
      insert_constraint(split, b, user);
      return;
    }
    std::size_t guard = 0;
    const std::size_t limit = 64 * (crossing.size() + 4) * (crossing.size() + 4);
    while (!crossing.empty()) {
      if (++guard > limit) fail(ErrorCode::InvalidConstraints, "constraint insertion did not converge");
      const Edge e = crossing.front();
      crossing.pop_front();
      const int p = third(e[0], e[1]), q = third(e[1], e[0]);
      if (proper_cross(v_[e[0]], v_[e[1]], v_[p], v_[q])) {
        flip(e[0], e[1]);
        if (proper_cross(v_[a], v_[b], v_[p], v_[q])) crossing.push_back({p, q});
      } else {
        crossing.push_back(e);
      }
    }
    fixed_.insert(ukey(a, b));
  }

  /// Drops triangles reachable from the super-triangle without crossing a
  /// fixed edge.
  void remove_outside() {
    std::vector<char> dead(tris_.size(), 0);
    std::vector<int> stack;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!alive_[t]) continue;
      for (int v : tris_[t])
        if (v >= n_input_) {
          stack.push_back(static_cast<int>(t));
          break;
        }
    }
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      if (dead[t]) continue;
      dead[t] = 1;
      for (int i = 0; i < 3; ++i) {
        const int a = tris_[t][i], b = tris_[t][(i + 1) % 3];
        if (fixed_.count(ukey(a, b))) continue;
        auto it = edge_tri_.find(dkey(b, a));
        if (it != edge_tri_.end() && !dead[it->second]) stack.push_back(it->second);
      }
    }
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (alive_[t] && dead[t]) kill_tri(static_cast<int>(t));
  }

  /// Lawson flips until every non-fixed interior edge is locally Delaunay,
  /// then the cocircular tie-break pass.
  void legalize_all() {
    std::deque<Edge> queue;
    for (const auto& [k, t] : edge_tri_) {
      const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
      if (a < b) queue.push_back({a, b});
    }
    std::sort(queue.begin(), queue.end());
    std::size_t guard = 0;
    const std::size_t limit = 1000 * (queue.size() + 16);
    while (!queue.empty() && ++guard < limit) {
      const Edge e = queue.front();
      queue.pop_front();
      if (!flippable(e[0], e[1])) continue;
      const int p = third(e[0], e[1]), q = third(e[1], e[0]);
      if (incircle(v_[e[0]], v_[e[1]], v_[p], v_[q]) > 0) {
        flip(e[0], e[1]);
        queue.push_back({e[0], q});
        queue.push_back({q, e[1]});
        queue.push_back({e[1], p});
        queue.push_back({p, e[0]});
      }
    }
    bool changed = true;
    for (int pass = 0; changed && pass < 64; ++pass) {
      changed = false;
      std::vector<Edge> edges;
      for (const auto& [k, t] : edge_tri_) {
        const int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffffu);
        if (a < b) edges.push_back({a, b});
      }
      std::sort(edges.begin(), edges.end());
      for (const auto& e : edges) {
        if (!flippable(e[0], e[1])) continue;
        const int p = third(e[0], e[1]), q = third(e[1], e[0]);
        if (incircle(v_[e[0]], v_[e[1]], v_[p], v_[q]) != 0) continue;
        if (!proper_cross(v_[e[0]], v_[e[1]], v_[p], v_[q])) continue;
        const Edge alt{std::min(p, q), std::max(p, q)};
        if (alt < e) {
          flip(e[0], e[1]);
          changed = true;
        }
      }
    }
  }

  Triangulation result() const {
    Triangulation out;
    out.vertices.assign(v_.begin(), v_.begin() + n_input_);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!alive_[t]) continue;
      const auto& tri = tris_[t];
      if (tri[0] >= n_input_ || tri[1] >= n_input_ || tri[2] >= n_input_) continue;
      // Rotate so the smallest index leads; keeps output order canonical.
      const int r = static_cast<int>(std::min_element(tri.begin(), tri.end()) - tri.begin());
      out.triangles.push_back({tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]});
    }
    std::sort(out.triangles.begin(), out.triangles.end());
    return out;
  }

  bool has_edge(int a, int b) const { return edge_tri_.count(dkey(a, b)) || edge_tri_.count(dkey(b, a)); }

 private:
  static std::uint64_t dkey(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }
  static std::uint64_t ukey(int a, int b) { return a < b ? dkey(a, b) : dkey(b, a); }

  static bool proper_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double d1 = orient(a, b, c), d2 = orient(a, b, d);
    const double d3 = orient(c, d, a), d4 = orient(c, d, b);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
  }

  int add_tri(int a, int b, int c) {
    int id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      tris_[id] = {a, b, c};
      alive_[id] = 1;
    } else {
      id = static_cast<int>(tris_.size());
      tris_.push_back({a, b, c});
      alive_.push_back(1);
    }
    edge_tri_[dkey(a, b)] = id;
    edge_tri_[dkey(b, c)] = id;
    edge_tri_[dkey(c, a)] = id;
    vert_edge_[a] = b;
    vert_edge_[b] = c;
    vert_edge_[c] = a;
    last_ = id;
    return id;
  }

  void kill_tri(int t) {
    const auto& tri = tris_[t];
    for (int i = 0; i < 3; ++i) {
      auto it = edge_tri_.find(dkey(tri[i], tri[(i + 1) % 3]));
      if (it != edge_tri_.end() && it->second == t) edge_tri_.erase(it);
    }
    alive_[t] = 0;
    free_.push_back(t);
  }

  int tri_of(int a, int b) const {
    auto it = edge_tri_.find(dkey(a, b));
    return it == edge_tri_.end() ? -1 : it->second;
  }

  /// Vertex opposite directed edge a->b in the triangle on its left.
  int third(int a, int b) const {
    const auto& t = tris_[tri_of(a, b)];
    for (int v : t)
      if (v != a && v != b) return v;
    return -1;
  }

  bool flippable(int a, int b) const {
    return !fixed_.count(ukey(a, b)) && tri_of(a, b) >= 0 && tri_of(b, a) >= 0;
  }

  /// Replaces edge a-b by the opposite diagonal; returns the two new triangles.
  std::pair<int, int> flip(int a, int b) {
    const int p = third(a, b), q = third(b, a);
    kill_tri(tri_of(a, b));
    kill_tri(tri_of(b, a));
    return {add_tri(a, q, p), add_tri(q, b, p)};
  }

  void legalize(int a, int b, int p) {
    // Edge a->b lies in triangle (a, b, p) with p the freshly inserted point.
    std::vector<std::array<int, 3>> stack{{a, b, p}};
    while (!stack.empty()) {
      const auto [u, v, w] = stack.back();
      stack.pop_back();
      if (!flippable(u, v)) continue;
      const int q = third(v, u);
      if (incircle(v_[u], v_[v], v_[w], v_[q]) > 0) {
        flip(u, v);
        stack.push_back({u, q, w});
        stack.push_back({q, v, w});
      }
    }
  }

  int locate(Vec2 p, int& zero_edge) const {
    int t = last_ >= 0 && alive_[last_] ? last_ : 0;
    while (!alive_[t]) ++t;
    std::size_t steps = 0;
    const std::size_t max_steps = 4 * tris_.size() + 64;
    for (;;) {
      const auto& tri = tris_[t];
      int next = -1;
      int zeros = 0;
      zero_edge = -1;
      const int start = static_cast<int>(steps % 3);
      for (int k = 0; k < 3; ++k) {
        const int i = (start + k) % 3;
        const int a = tri[i], b = tri[(i + 1) % 3];
        const double o = orient(v_[a], v_[b], p);
        if (o < 0) {
          next = tri_of(b, a);
          if (next >= 0) break;
        } else if (o == 0) {
          ++zeros;
          zero_edge = i;
        }
      }
      if (next < 0) {
        if (zeros >= 2) fail(ErrorCode::InvalidArgument, "duplicate vertex");
        if (zeros == 0) zero_edge = -1;
        return t;
      }
      t = next;
      if (++steps > max_steps) break;
    }
    // Walk cycled; fall back to a scan.
    for (std::size_t s = 0; s < tris_.size(); ++s) {
      if (!alive_[s]) continue;
      const auto& tri = tris_[s];
      int zeros = 0, neg = 0;
      zero_edge = -1;
      for (int i = 0; i < 3; ++i) {
        const double o = orient(v_[tri[i]], v_[tri[(i + 1) % 3]], p);
        if (o < 0) ++neg;
        if (o == 0) {
          ++zeros;
          zero_edge = i;
        }
      }
      if (neg == 0) {
        if (zeros >= 2) fail(ErrorCode::InvalidArgument, "duplicate vertex");
        return static_cast<int>(s);
      }
    }
    fail(ErrorCode::InvalidArgument, "point location failed");
  }

  void insert_point(int pi) {
    int zero_edge = -1;
    const int t = locate(v_[pi], zero_edge);
    const auto tri = tris_[t];
    if (zero_edge < 0) {
      kill_tri(t);
      add_tri(tri[0], tri[1], pi);
      add_tri(tri[1], tri[2], pi);
      add_tri(tri[2], tri[0], pi);
      legalize(tri[0], tri[1], pi);
      legalize(tri[1], tri[2], pi);
      legalize(tri[2], tri[0], pi);
      return;
    }
    const int u = tri[zero_edge], v = tri[(zero_edge + 1) % 3], w = tri[(zero_edge + 2) % 3];
    const int t2 = tri_of(v, u);
    kill_tri(t);
    add_tri(u, pi, w);
    add_tri(pi, v, w);
    if (t2 >= 0) {
      const int z = third(v, u);
      kill_tri(t2);
      add_tri(v, pi, z);
      add_tri(pi, u, z);
      legalize(v, z, pi);
      legalize(z, u, pi);
    }
    legalize(v, w, pi);
    legalize(w, u, pi);
  }

  /// Edges properly crossed by segment a-b, in walk order. Returns the index
  /// of a vertex lying on the open segment if one is met first, else -1.
  int collect_crossings(int a, int b, std::deque<Edge>& out) const {
    const Vec2 pa = v_[a], pb = v_[b];
    // Rotate around a to find the triangle whose wedge contains direction a->b.
    int x = vert_edge_[a];
    int l = -1, r = -1;
    const std::size_t guard_max = tris_.size() + 8;
    for (std::size_t guard = 0; guard < guard_max; ++guard) {
      const int y = third(a, x);
      const double ox = orient(pa, v_[x], pb);
      const double oy = orient(pa, v_[y], pb);
      if (ox == 0 && dot(v_[x] - pa, pb - pa) > 0) return x == b ? -1 : x;
      if (oy == 0 && dot(v_[y] - pa, pb - pa) > 0) return y == b ? -1 : y;
      if (ox > 0 && oy < 0) {
        r = x;
        l = y;
        break;
      }
      x = y;
    }
    if (l < 0) fail(ErrorCode::InvalidConstraints, "could not start constraint walk");
    out.push_back({r, l});
    for (std::size_t guard = 0; guard < guard_max; ++guard) {
      const int z = third(l, r);
      if (z == b) return -1;
      const double oz = orient(pa, pb, v_[z]);
      if (oz == 0) return z;
      if (oz > 0) l = z; else r = z;
      out.push_back({r, l});
    }
    fail(ErrorCode::InvalidConstraints, "constraint walk did not terminate");
  }

  std::vector<Vec2> v_;
  int n_input_;
  std::vector<Tri> tris_;
  std::vector<char> alive_;
  std::vector<int> free_;
  std::vector<int> vert_edge_;
  std::unordered_map<std::uint64_t, int> edge_tri_;
  std::unordered_set<std::uint64_t> fixed_;
  std::unordered_set<std::uint64_t> user_constraints_;
  int last_ = -1;
};

/// Hull boundary in CCW order including points that lie on hull edges.
inline std::vector<int> hull_chain(std::span<const Vec2> pts) {
  const auto hull = convex_hull(pts);
  std::vector<int> hull_idx;
  for (auto h : hull)
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (pts[i] == h) {
        hull_idx.push_back(static_cast<int>(i));
        break;
      }
  std::vector<int> chain;
  for (std::size_t k = 0; k < hull_idx.size(); ++k) {
    const Vec2 a = pts[hull_idx[k]], b = pts[hull_idx[(k + 1) % hull_idx.size()]];
    std::vector<std::pair<double, int>> on;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto ii = static_cast<int>(i);
      if (ii == hull_idx[k] || ii == hull_idx[(k + 1) % hull_idx.size()]) continue;
      if (orient(a, b, pts[i]) != 0) continue;
      const double t = dot(pts[i] - a, b - a) / norm2(b - a);
      if (t > 0 && t < 1) on.push_back({t, ii});
    }
    std::sort(on.begin(), on.end());
    chain.push_back(hull_idx[k]);
    for (auto& [t, i] : on) chain.push_back(i);
  }
  return chain;
}

inline void check_constraints(std::span<const Vec2> v, std::span<const Edge> edges) {
  for (const auto& e : edges)
    if (e[0] < 0 || e[1] < 0 || e[0] >= static_cast<int>(v.size()) || e[1] >= static_cast<int>(v.size()) || e[0] == e[1])
      fail(ErrorCode::InvalidConstraints, "constraint edge index out of range");
  // Bucket edges by grid cells so the pairwise test stays near-linear.
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (auto p : v) {
    minx = std::min(minx, p.x); maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y); maxy = std::max(maxy, p.y);
  }
  const double extent = std::max({maxx - minx, maxy - miny, 1e-9});
  const int cells = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(edges.size()))), 1, 512);
  const double cs = extent / cells * (1 + 1e-9);
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  auto cell = [&](double x, double lo) { return std::clamp(static_cast<int>((x - lo) / cs), 0, cells - 1); };
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Vec2 a = v[edges[i][0]], b = v[edges[i][1]];
    for (int cy = cell(std::min(a.y, b.y), miny); cy <= cell(std::max(a.y, b.y), miny); ++cy)
      for (int cx = cell(std::min(a.x, b.x), minx); cx <= cell(std::max(a.x, b.x), minx); ++cx)
        grid[static_cast<std::uint64_t>(cy) * 1024 + static_cast<std::uint64_t>(cx)].push_back(i);
  }
  for (const auto& [k, list] : grid)
    for (std::size_t x = 0; x < list.size(); ++x)
      for (std::size_t y = x + 1; y < list.size(); ++y) {
        const auto& e = edges[list[x]];
        const auto& f = edges[list[y]];
        const int shared = (e[0] == f[0]) + (e[0] == f[1]) + (e[1] == f[0]) + (e[1] == f[1]);
        if (shared >= 2) fail(ErrorCode::InvalidConstraints, "duplicate constraint edge");
        const Vec2 a = v[e[0]], b = v[e[1]], c = v[f[0]], d = v[f[1]];
        if (shared == 1) {
          // Adjacent edges may only meet at the shared endpoint.
          const int s = (e[0] == f[0] || e[0] == f[1]) ? e[0] : e[1];
          const int eo = e[0] == s ? e[1] : e[0];
          const int fo = f[0] == s ? f[1] : f[0];
          const Vec2 ps = v[s], pe = v[eo], pf = v[fo];
          if (orient(ps, pe, pf) == 0 && dot(pe - ps, pf - ps) > 0)
            fail(ErrorCode::InvalidConstraints, "overlapping constraint edges");
          continue;
        }
        if (segments_intersect(a, b, c, d)) fail(ErrorCode::InvalidConstraints, "constraint edges intersect");
      }
}

}  // namespace detail

/// Constrained Delaunay triangulation of the convex hull of `vertices`;
/// every constraint edge appears in the output.
inline Triangulation constrained_delaunay(std::span<const Vec2> vertices, std::span<const Edge> constraints) {
  {
    std::vector<Vec2> sorted(vertices.begin(), vertices.end());
    std::sort(sorted.begin(), sorted.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (distance(sorted[i], sorted[i - 1]) <= 1e-9) fail(ErrorCode::InvalidArgument, "duplicate vertices");
  }
  detail::check_constraints(vertices, constraints);
  detail::CdtBuilder b(std::vector<Vec2>(vertices.begin(), vertices.end()));
  b.insert_all();
  const auto chain = detail::hull_chain(vertices);
  for (std::size_t i = 0; i < chain.size(); ++i) b.insert_constraint(chain[i], chain[(i + 1) % chain.size()], false);
  for (const auto& e : constraints) b.insert_constraint(e[0], e[1], true);
  b.remove_outside();
  b.legalize_all();
  auto out = b.result();
  out.constrained_edges.assign(constraints.begin(), constraints.end());
  return out;
}

/// Constraint edges of a closed polygon over vertices 0..n-1.
inline std::vector<Edge> polygon_edges(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({static_cast<int>(i), static_cast<int>((i + 1) % n)});
  return e;
}

}  // namespace slicereg
