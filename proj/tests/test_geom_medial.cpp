#include <gtest/gtest.h>

#include <random>
#include <set>

#include "slicereg/geom/cdt.hpp"
#include "slicereg/geom/medial.hpp"
#include "test_support.hpp"

using namespace slicereg;
using slicereg::testing::shoelace;

namespace {

double area(const Triangulation& t) {
  double a = 0;
  for (const auto& tri : t.triangles) a += 0.5 * orient(t.vertices[tri[0]], t.vertices[tri[1]], t.vertices[tri[2]]);
  return a;
}

/// Densify a polygon so every edge is at most `step` long.
std::vector<Vec2> densify(const std::vector<Vec2>& poly, double step) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / step)));
    for (int k = 0; k < n; ++k) out.push_back(a + (static_cast<double>(k) / n) * (b - a));
  }
  return out;
}

// Rectangle 100x60 with a slot of the given width and depth cut from the top.
std::vector<Vec2> notched_rectangle(double slot_w, double depth) {
  const double x0 = 50 - slot_w / 2, x1 = 50 + slot_w / 2;
  return {{0, 0}, {100, 0}, {100, 60}, {x1, 60}, {x1, 60 - depth}, {x0, 60 - depth}, {x0, 60}, {0, 60}};
}

}  // namespace

TEST(ExteriorTriangles, ConvexContourHasNone) {
  std::vector<Vec2> v;
  for (int i = 0; i < 40; ++i) v.push_back({50 * std::cos(i * 0.157), 30 * std::sin(i * 0.157)});
  const auto t = constrained_delaunay(v, polygon_edges(v.size()));
  EXPECT_TRUE(exterior_triangles(t, v).triangles.empty());
}

TEST(ExteriorTriangles, NotchAreaMatchesHullMinusPolygon) {
  const auto poly = notched_rectangle(10, 30);
  const auto t = constrained_delaunay(poly, polygon_edges(poly.size()));
  const auto ext = exterior_triangles(t, poly);
  EXPECT_NEAR(area(ext), shoelace(convex_hull(poly)) - shoelace(poly), 1e-9);
  EXPECT_NEAR(area(ext), 300.0, 1e-9);
}

TEST(ExteriorTriangles, CShapeFillsTheMouth) {
  const std::vector<Vec2> c{{0, 0}, {60, 0}, {60, 15}, {20, 15}, {20, 45}, {60, 45}, {60, 60}, {0, 60}};
  const auto dense = densify(c, 2.0);
  const auto t = constrained_delaunay(dense, polygon_edges(dense.size()));
  const auto ext = exterior_triangles(t, dense);
  EXPECT_NEAR(area(ext), shoelace(convex_hull(dense)) - shoelace(dense), 1e-6);
  EXPECT_NEAR(area(ext), 40.0 * 30.0, 1e-6);
}

TEST(ExteriorTriangles, PartitionsTheTriangulation) {
  std::mt19937_64 rng(4);
  const auto poly = slicereg::testing::random_star_polygon(rng, 80, {0, 0}, 10, 40);
  const auto t = constrained_delaunay(poly, polygon_edges(poly.size()));
  const auto ext_ids = exterior_triangle_ids(t, poly);
  const std::set<std::size_t> ext(ext_ids.begin(), ext_ids.end());
  double inside_area = 0;
  for (std::size_t i = 0; i < t.triangles.size(); ++i) {
    const auto c = triangle_centroid(t, t.triangles[i]);
    EXPECT_EQ(ext.count(i) == 1, !slicereg::testing::ray_cast_inside(c, poly));
    if (!ext.count(i))
      inside_area += 0.5 * orient(t.vertices[t.triangles[i][0]], t.vertices[t.triangles[i][1]], t.vertices[t.triangles[i][2]]);
  }
  EXPECT_NEAR(inside_area, shoelace(poly), 1e-6);
}

TEST(RemoveSlivers, EquilateralKeptObtuseRemoved) {
  Triangulation t;
  t.vertices = {{0, 0}, {2, 0}, {1, std::sqrt(3.0)}, {10, 0}, {14, 0}, {11, 0.5}};
  t.triangles = {{0, 1, 2}, {3, 4, 5}};
  const auto kept = remove_slivers(t);
  ASSERT_EQ(kept.triangles.size(), 1u);
  EXPECT_EQ(kept.triangles[0], (Tri{0, 1, 2}));
}

TEST(RemoveSlivers, MatchesCircumcenterOracle) {
  std::mt19937_64 rng(8);
  const auto pts = slicereg::testing::random_points(rng, 500, 0, 100);
  const auto t = constrained_delaunay(pts, {});
  const auto kept = remove_slivers(t);
  std::set<Tri> want;
  for (const auto& tri : t.triangles) {
    const Vec2 a = pts[tri[0]], b = pts[tri[1]], c = pts[tri[2]];
    // Oracle: explicit circumcenter, then barycentric inclusion.
    const double d = 2 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    const double ux = (norm2(a) * (b.y - c.y) + norm2(b) * (c.y - a.y) + norm2(c) * (a.y - b.y)) / d;
    const double uy = (norm2(a) * (c.x - b.x) + norm2(b) * (a.x - c.x) + norm2(c) * (b.x - a.x)) / d;
    const Vec2 u{ux, uy};
    const double area2 = orient(a, b, c);
    const double l0 = orient(b, c, u) / area2, l1 = orient(c, a, u) / area2, l2 = orient(a, b, u) / area2;
    if (l0 >= -1e-9 && l1 >= -1e-9 && l2 >= -1e-9) want.insert(tri);
  }
  const std::set<Tri> got(kept.triangles.begin(), kept.triangles.end());
  EXPECT_EQ(got, want);
}

TEST(VoronoiDual, TwoTrianglesOneEdge) {
  Triangulation t;
  t.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  t.triangles = {{0, 1, 2}, {0, 2, 3}};
  const auto v = voronoi_dual(t);
  EXPECT_EQ(v.voronoi_vertices.size(), 2u);
  EXPECT_EQ(v.voronoi_edges.size(), 1u);
}

TEST(VoronoiDual, OpenFanHasKMinusOneEdges) {
  Triangulation t;
  t.vertices.push_back({0, 0});
  const int k = 5;
  for (int i = 0; i <= k; ++i) t.vertices.push_back({std::cos(i * 0.5), std::sin(i * 0.5)});
  for (int i = 1; i <= k; ++i) t.triangles.push_back({0, i, i + 1});
  EXPECT_EQ(voronoi_dual(t).voronoi_edges.size(), static_cast<std::size_t>(k - 1));
}

TEST(VoronoiDual, EdgeCountEqualsInteriorDelaunayEdges) {
  std::mt19937_64 rng(12);
  const auto pts = slicereg::testing::random_points(rng, 300, 0, 50);
  const auto t = constrained_delaunay(pts, {});
  std::map<Edge, int> uses;
  for (const auto& tri : t.triangles)
    for (int i = 0; i < 3; ++i) ++uses[{std::min(tri[i], tri[(i + 1) % 3]), std::max(tri[i], tri[(i + 1) % 3])}];
  std::size_t interior = 0;
  for (auto& [e, n] : uses) interior += n == 2;
  EXPECT_EQ(voronoi_dual(t).voronoi_edges.size(), interior);
}

namespace {
std::vector<MedialChain> chains_for(const std::vector<Vec2>& contour, std::size_t alpha) {
  const auto edges = polygon_edges(contour.size());
  const auto t = constrained_delaunay(contour, edges);
  const auto ext = remove_slivers(exterior_triangles(t, contour));
  return medial_axis_chains(voronoi_dual(ext), contour, edges, alpha);
}
}  // namespace

TEST(MedialAxisChains, ConvexShapeHasNone) {
  std::vector<Vec2> v;
  for (int i = 0; i < 100; ++i) v.push_back({50 * std::cos(i * 0.0628), 30 * std::sin(i * 0.0628)});
  EXPECT_TRUE(chains_for(v, 1).empty());
}

TEST(MedialAxisChains, DeepNotchGivesOneChainAlongItsAxis) {
  const auto contour = densify(notched_rectangle(6, 50), 1.0);
  const auto chains = chains_for(contour, 20);
  ASSERT_EQ(chains.size(), 1u);
  // The chain runs down the slot near x = 50.
  const auto edges = polygon_edges(contour.size());
  const auto t = constrained_delaunay(contour, edges);
  const auto vor = voronoi_dual(remove_slivers(exterior_triangles(t, contour)));
  double ymin = 1e9;
  for (auto e : chains[0].edges)
    for (int ti : vor.voronoi_edges[e]) {
      EXPECT_NEAR(vor.voronoi_vertices[ti].x, 50, 3.0);
      ymin = std::min(ymin, vor.voronoi_vertices[ti].y);
    }
  EXPECT_LT(ymin, 20);
  for (int v : chains[0].delaunay_vertices) EXPECT_NEAR(contour[v].x, 50, 3.0 + 1e-9);
}

TEST(MedialAxisChains, AlphaAboveLongestChainGivesNothing) {
  const auto contour = densify(notched_rectangle(6, 50), 1.0);
  const auto all = chains_for(contour, 1);
  std::size_t longest = 0;
  for (const auto& c : all) longest = std::max(longest, c.edge_count());
  ASSERT_GT(longest, 0u);
  EXPECT_TRUE(chains_for(contour, longest + 1).empty());
  EXPECT_FALSE(chains_for(contour, longest).empty());
}

TEST(MedialAxisChains, NeverCrossTheContour) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto poly = slicereg::testing::random_star_polygon(rng, 120, {0, 0}, 10, 60);
    const auto edges = polygon_edges(poly.size());
    const auto t = constrained_delaunay(poly, edges);
    const auto vor = voronoi_dual(remove_slivers(exterior_triangles(t, poly)));
    for (const auto& ch : medial_axis_chains(vor, poly, edges, 1))
      for (auto e : ch.edges) {
        const Vec2 a = vor.voronoi_vertices[vor.voronoi_edges[e][0]];
        const Vec2 b = vor.voronoi_vertices[vor.voronoi_edges[e][1]];
        for (auto ce : edges) {
          const Vec2 c = poly[ce[0]], d = poly[ce[1]];
          const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
          EXPECT_FALSE(d1 * d2 < 0 && d3 * d4 < 0);
        }
      }
  }
}
