#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "slicereg/geom/cdt.hpp"
#include "test_support.hpp"

using namespace slicereg;

namespace {

std::set<Edge> edge_set(const Triangulation& t) {
  const auto e = t.edges();
  return {e.begin(), e.end()};
}

void expect_valid(const Triangulation& t) {
  std::set<Tri> seen;
  for (const auto& tri : t.triangles) {
    for (int v : tri) {
      ASSERT_GE(v, 0);
      ASSERT_LT(v, static_cast<int>(t.vertices.size()));
    }
    EXPECT_GT(orient(t.vertices[tri[0]], t.vertices[tri[1]], t.vertices[tri[2]]), 0);
    auto s = tri;
    std::sort(s.begin(), s.end());
    EXPECT_TRUE(seen.insert(s).second) << "duplicate triangle";
  }
  const auto edges = edge_set(t);
  for (auto e : t.constrained_edges) {
    const Edge k{std::min(e[0], e[1]), std::max(e[0], e[1])};
    EXPECT_TRUE(edges.count(k)) << "missing constraint " << k[0] << "-" << k[1];
  }
}

// Every unconstrained interior edge must be locally Delaunay.
void expect_locally_delaunay(const Triangulation& t) {
  std::set<Edge> constrained;
  for (auto e : t.constrained_edges) constrained.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});
  std::map<std::pair<int, int>, int> opposite;
  for (const auto& tri : t.triangles)
    for (int i = 0; i < 3; ++i) opposite[{tri[i], tri[(i + 1) % 3]}] = tri[(i + 2) % 3];
  for (const auto& [e, p] : opposite) {
    auto it = opposite.find({e.second, e.first});
    if (it == opposite.end()) continue;
    if (constrained.count({std::min(e.first, e.second), std::max(e.first, e.second)})) continue;
    const double scale = 1e-9 * std::pow(norm2(t.vertices[e.first] - t.vertices[p]) + 1.0, 2);
    EXPECT_LE(incircle(t.vertices[e.first], t.vertices[e.second], t.vertices[p], t.vertices[it->second]), scale);
  }
}

double total_area(const Triangulation& t) {
  double a = 0;
  for (const auto& tri : t.triangles) a += 0.5 * orient(t.vertices[tri[0]], t.vertices[tri[1]], t.vertices[tri[2]]);
  return a;
}

}  // namespace

TEST(ConstrainedDelaunay, SquareUsesLowerIndexDiagonal) {
  const std::vector<Vec2> v{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto t = constrained_delaunay(v, polygon_edges(4));
  ASSERT_EQ(t.triangles.size(), 2u);
  EXPECT_TRUE(edge_set(t).count({0, 2}));
  expect_valid(t);
}

TEST(ConstrainedDelaunay, ConvexPolygonFan) {
  for (std::size_t n : {3u, 5u, 8u, 17u, 64u}) {
    std::vector<Vec2> v;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      v.push_back({100 * std::cos(a), 60 * std::sin(a)});
    }
    const auto t = constrained_delaunay(v, polygon_edges(n));
    EXPECT_EQ(t.triangles.size(), n - 2);
    expect_valid(t);
  }
}

TEST(ConstrainedDelaunay, RandomSimplePolygonsKeepConstraintsAndEulerCount) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const auto poly = slicereg::testing::random_star_polygon(rng, 20 + trial * 3, {0, 0}, 5, 50);
    const auto t = constrained_delaunay(poly, polygon_edges(poly.size()));
    expect_valid(t);
    expect_locally_delaunay(t);
    // Euler: T = 2 n_interior + n_boundary - 2, boundary = points on the hull.
    const auto hull = convex_hull(poly);
    std::size_t on_hull = 0;
    for (auto p : poly)
      for (std::size_t i = 0; i < hull.size(); ++i)
        if (orient(hull[i], hull[(i + 1) % hull.size()], p) == 0 &&
            dot(p - hull[i], p - hull[(i + 1) % hull.size()]) <= 0) {
          ++on_hull;
          break;
        }
    EXPECT_EQ(t.triangles.size(), 2 * (poly.size() - on_hull) + on_hull - 2);
    EXPECT_NEAR(total_area(t), signed_area(hull), 1e-6 * signed_area(hull));
  }
}

TEST(ConstrainedDelaunay, LatticeContourWithCollinearRuns) {
  // Staircase polygon on half-integer lattice: lots of cocircular and
  // collinear configurations.
  std::vector<Vec2> poly;
  for (int i = 0; i <= 20; ++i) poly.push_back({i + 0.5, 0.5});
  for (int i = 1; i <= 10; ++i) poly.push_back({20.5, i + 0.5});
  for (int i = 19; i >= 12; --i) poly.push_back({i + 0.5, 10.5});
  for (int i = 9; i >= 3; --i) poly.push_back({12.5, i + 0.5});  // notch down
  for (int i = 11; i >= 8; --i) poly.push_back({i + 0.5, 2.5});
  for (int i = 3; i <= 10; ++i) poly.push_back({8.5, i + 0.5});
  for (int i = 7; i >= 0; --i) poly.push_back({i + 0.5, 10.5});
  for (int i = 9; i >= 1; --i) poly.push_back({0.5, i + 0.5});
  ASSERT_GT(signed_area(poly), 0);
  const auto t = constrained_delaunay(poly, polygon_edges(poly.size()));
  expect_valid(t);
  expect_locally_delaunay(t);
  EXPECT_NEAR(total_area(t), signed_area(convex_hull(poly)), 1e-9);
}

TEST(ConstrainedDelaunay, UnconstrainedRandomPointsAreDelaunay) {
  std::mt19937_64 rng(99);
  const auto pts = slicereg::testing::random_points(rng, 2000, 0, 1000);
  const auto t = constrained_delaunay(pts, {});
  expect_valid(t);
  // Global empty-circumcircle check on a sample of triangles.
  for (std::size_t i = 0; i < t.triangles.size(); i += 37) {
    const auto& tri = t.triangles[i];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (static_cast<int>(k) == tri[0] || static_cast<int>(k) == tri[1] || static_cast<int>(k) == tri[2]) continue;
      EXPECT_LE(incircle(pts[tri[0]], pts[tri[1]], pts[tri[2]], pts[k]), 1e-3);
    }
  }
}

TEST(ConstrainedDelaunay, SelfIntersectingConstraintsRejected) {
  const std::vector<Vec2> bowtie{{0, 0}, {10, 10}, {10, 0}, {0, 10}};
  try {
    constrained_delaunay(bowtie, polygon_edges(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConstraints);
  }
}

TEST(ConstrainedDelaunay, DuplicateVerticesRejected) {
  const std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}, {0, 0}};
  EXPECT_THROW(constrained_delaunay(v, {}), Error);
}

TEST(ConstrainedDelaunay, ConstraintThroughCollinearVertexIsSplit) {
  const std::vector<Vec2> v{{0, 0}, {10, 0}, {5, 0}, {5, 5}, {5, -5}};
  const std::vector<Edge> c{{0, 1}};
  const auto t = constrained_delaunay(v, c);
  const auto e = edge_set(t);
  EXPECT_TRUE(e.count({0, 2}));
  EXPECT_TRUE(e.count({1, 2}));
}
