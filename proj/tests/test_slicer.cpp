#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "slicereg/slicer/slicer.hpp"
#include "test_support.hpp"

using namespace slicereg;
using slicereg::testing::ray_cast_inside;
using slicereg::testing::shoelace;

namespace {

double loop_mean_radius(const Loop2& l, Vec2 c = {}) {
  double s = 0;
  for (auto p : l) s += distance(p, c);
  return s / static_cast<double>(l.size());
}

std::size_t count_label(const AnnotatedSliceImage& img, int id) {
  return static_cast<std::size_t>(std::count(img.labels.begin(), img.labels.end(), id));
}

std::array<double, 9> rotation_matrix(Vec3 axis, double angle) {
  const Vec3 a = normalized(axis);
  const double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
  return {t * a.x * a.x + c,       t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y,
          t * a.x * a.y + s * a.z, t * a.y * a.y + c,       t * a.y * a.z - s * a.x,
          t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c};
}

Vec3 rotate(const std::array<double, 9>& r, Vec3 v) {
  return {r[0] * v.x + r[1] * v.y + r[2] * v.z, r[3] * v.x + r[4] * v.y + r[5] * v.z,
          r[6] * v.x + r[7] * v.y + r[8] * v.z};
}

bool loop_is_simple(const Loop2& l) {
  const std::size_t n = l.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(l[i], l[(i + 1) % n], l[j], l[(j + 1) % n])) return false;
    }
  return true;
}

}  // namespace

TEST(SlicePlane, BasisIsRightHandedOrthonormal) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    const Vec3 n{g(rng), g(rng), g(rng)};
    const auto p = make_slice_plane({}, n, 1, 10, 10);
    EXPECT_NEAR(dot(p.u, p.u), 1, 1e-12);
    EXPECT_NEAR(dot(p.v, p.v), 1, 1e-12);
    EXPECT_NEAR(dot(p.u, p.v), 0, 1e-12);
    EXPECT_NEAR(dot(p.u, p.normal), 0, 1e-12);
    const Vec3 c = cross(p.u, p.v);
    EXPECT_NEAR(norm(c - p.normal), 0, 1e-9);
  }
  const auto px = make_slice_plane({}, {1, 0, 0}, 1, 4, 4);
  EXPECT_NEAR(norm(px.u - Vec3{0, 1, 0}), 0, 1e-12);
  EXPECT_THROW(make_slice_plane({}, {0, 0, 1}, 0, 4, 4), Error);
}

TEST(SliceRegion, UnitCubeThroughCenterIsUnitSquare) {
  const auto cube = make_box({0, 0, 0}, {1, 1, 1});
  const auto plane = make_slice_plane({0.5, 0.5, 0.5}, {0, 0, 1}, 0.01, 10, 10);
  SliceStats st;
  const auto loops = slice_region(cube, 1, plane, &st);
  ASSERT_EQ(loops.size(), 1u);
  EXPECT_DOUBLE_EQ(shoelace(loops[0]), 1.0);
  double xmin = 1e9, xmax = -1e9;
  for (auto p : loops[0]) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  EXPECT_DOUBLE_EQ(xmax - xmin, 1.0);
  EXPECT_EQ(st.segments, loops[0].size());
  EXPECT_EQ(st.offset_shift, 0);
}

TEST(SliceRegion, CubeAreaIsExactInPixels) {
  const auto cube = make_box({-5, -5, -5}, {5, 5, 5});
  const auto plane = make_slice_plane({0, 0, 0.3}, {0, 0, 1}, 1, 12, 12);
  const auto img = slice_annotation(cube, plane);
  EXPECT_EQ(count_label(img, 1), 100u);
  EXPECT_TRUE(img.consistent());
}

TEST(SliceRegion, VerticesOnThePlaneArePerturbed) {
  const auto cube = make_box({0, 0, 0}, {1, 1, 1});
  SliceStats st;
  const auto loops = slice_region(cube, 1, make_slice_plane({0, 0, 0}, {0, 0, 1}, 1, 4, 4), &st);
  EXPECT_EQ(st.offset_shift, 1e-9);
  ASSERT_EQ(loops.size(), 1u);
  EXPECT_NEAR(shoelace(loops[0]), 1.0, 1e-12);

  LabeledMesh oct;
  oct.vertices = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  oct.triangles = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  oct.region_of.assign(8, 1);
  oct.regions[1] = {1, "oct", {1, 2, 3}};
  ASSERT_TRUE(oct.edge_closed(1));
  const auto ol = slice_region(oct, 1, make_slice_plane({}, {0, 0, 1}, 1, 4, 4));
  ASSERT_EQ(ol.size(), 1u);
  EXPECT_NEAR(shoelace(ol[0]), 2.0, 1e-8);
}

TEST(SliceRegion, IcosphereCrossSectionRadius) {
  const auto sphere = make_icosphere(100, 4);
  for (double d : {0.0, 30.0, 60.0, -85.0}) {
    const auto loops = slice_region(sphere, 1, make_slice_plane({0, 0, d}, {0, 0, 1}, 1, 10, 10));
    ASSERT_EQ(loops.size(), 1u) << d;
    const double expect = std::sqrt(100.0 * 100 - d * d);
    EXPECT_NEAR(loop_mean_radius(loops[0]), expect, 0.01 * expect) << d;
    EXPECT_GT(shoelace(loops[0]), 0) << "outward mesh gives counter-clockwise loops";
  }
}

TEST(SliceRegion, MissingThePlaneGivesNothing) {
  const auto sphere = make_icosphere(10, 2);
  EXPECT_TRUE(slice_region(sphere, 1, make_slice_plane({0, 0, 10.5}, {0, 0, 1}, 1, 4, 4)).empty());
  EXPECT_THROW(slice_region(sphere, 7, make_slice_plane({}, {0, 0, 1}, 1, 4, 4)), Error);
}

TEST(SliceRegion, OpenSurfaceIsNonManifold) {
  auto cube = make_box({0, 0, 0}, {1, 1, 1});
  cube.triangles.erase(cube.triangles.begin() + 4);  // a side face triangle
  cube.region_of.pop_back();
  try {
    slice_region(cube, 1, make_slice_plane({0.5, 0.5, 0.5}, {0, 0, 1}, 1, 4, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonManifoldRegion);
  }
}

TEST(SliceRegion, SegmentsAreConservedAndLoopsCloseOnRandomPlanes) {
  LabeledMesh m = make_icosphere(50, 3, {0, 0, 0}, 1);
  m.append(make_icosphere(20, 3, {70, 0, 0}, 2));
  m.append(make_box({-20, -80, -20}, {20, -60, 20}, 3));
  // A segment inside a triangle is no longer than the triangle's longest edge.
  double longest = 0;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) longest = std::max(longest, norm(m.vertices[t[k]] - m.vertices[t[(k + 1) % 3]]));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> off(-40, 40);
  int nonempty = 0;
  for (int k = 0; k < 100; ++k) {
    const Vec3 n{g(rng), g(rng), g(rng)};
    const auto plane = make_slice_plane({off(rng), off(rng) - 20, off(rng)}, n, 1, 8, 8);
    for (int r : {1, 2, 3}) {
      SliceStats st;
      const auto loops = slice_region(m, r, plane, &st);
      std::size_t pts = 0;
      for (const auto& l : loops) {
        ASSERT_GE(l.size(), 3u);
        pts += l.size();
        for (std::size_t i = 0; i < l.size(); ++i) EXPECT_LE(distance(l[i], l[(i + 1) % l.size()]), longest + 1e-9);
        EXPECT_TRUE(loop_is_simple(l));
      }
      EXPECT_EQ(pts, st.segments);
      nonempty += !loops.empty();
    }
  }
  EXPECT_GT(nonempty, 50);
}

TEST(Rasterize, SquareLoopMatchesScanlineOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-12, 12);
  const auto plane = make_slice_plane({}, {0, 0, 1}, 0.7, 41, 37);
  for (int k = 0; k < 50; ++k) {
    const Vec2 c{u(rng), u(rng)};
    const double a = u(rng) / 4, s = 3 + std::abs(u(rng));
    Loop2 sq;
    for (int i = 0; i < 4; ++i) {
      const double t = a + i * std::numbers::pi / 2;
      sq.push_back(c + s * Vec2{std::cos(t), std::sin(t)});
    }
    std::vector<Vec2> px;
    for (auto p : sq) px.push_back(plane_to_pixel(plane, p));
    std::size_t oracle = 0;
    for (int y = 0; y < plane.height; ++y)
      for (int x = 0; x < plane.width; ++x) oracle += ray_cast_inside({double(x), double(y)}, px);
    const auto img = rasterize_annotation({{5, {sq}}}, plane);
    EXPECT_EQ(count_label(img, 5), oracle);
    for (int y = 0; y < plane.height; ++y)
      for (int x = 0; x < plane.width; ++x)
        ASSERT_EQ(img.at(x, y) == 5, ray_cast_inside({double(x), double(y)}, px));
  }
}

TEST(Rasterize, NestedDisksPaintInnerOnTop) {
  const auto plane = make_slice_plane({}, {0, 0, 1}, 1, 64, 64);
  auto disk = [](double r) {
    Loop2 l;
    for (int i = 0; i < 200; ++i) l.push_back(r * Vec2{std::cos(i * 0.0314159), std::sin(i * 0.0314159)});
    return l;
  };
  // Region 1 is inner here, so painting by id would hide it.
  const auto img = rasterize_annotation({{1, {disk(10)}}, {2, {disk(25)}}}, plane);
  EXPECT_EQ(img.at(32, 32), 1);
  EXPECT_EQ(img.at(32 + 17, 32), 2);
  EXPECT_EQ(img.at(1, 1), 0);
  EXPECT_NEAR(double(count_label(img, 1)), std::numbers::pi * 100, 15);
  EXPECT_NEAR(double(count_label(img, 2)), std::numbers::pi * (625 - 100), 30);
}

TEST(Rasterize, EmptyInputIsBackground) {
  const auto img = rasterize_annotation({}, make_slice_plane({}, {0, 0, 1}, 1, 9, 7));
  EXPECT_EQ(count_label(img, 0), 63u);
  ASSERT_TRUE(img.provenance.has_value());
}

TEST(SliceSeries, ExtremesAreEmptyAndCountOneIsTheComposition) {
  const auto sphere = make_icosphere(30, 3);
  SeriesSpec s;
  s.origin = Vec3{};
  s.direction = {0, 0, 1};
  s.start = -40;
  s.interval = 80;
  s.count = 2;
  s.width = s.height = 70;
  for (const auto& img : slice_series(sphere, s)) EXPECT_EQ(count_label(img, 1), 0u);

  s.start = 7;
  s.count = 1;
  const auto one = slice_series(sphere, s);
  ASSERT_EQ(one.size(), 1u);
  const auto plane = make_slice_plane({0, 0, 7}, {0, 0, 1}, 1, 70, 70);
  const auto direct = rasterize_annotation({{1, slice_region(sphere, 1, plane)}}, plane, sphere.regions);
  EXPECT_EQ(one[0], direct);
}

TEST(SliceSeries, SphereAreaProfile) {
  const double r = 100;
  const auto sphere = make_icosphere(r, 5);
  SeriesSpec s;
  s.origin = Vec3{};
  s.direction = normalized(Vec3{1, 2, 2});
  s.start = -90;
  s.interval = 10;
  s.count = 19;
  s.pixel_pitch = 0.5;
  s.width = s.height = 420;
  const auto imgs = slice_series(sphere, s, 2);
  for (int i = 0; i < s.count; ++i) {
    const double d = s.start + i * s.interval;
    const double expect = std::numbers::pi * (r * r - d * d);
    const double area = double(count_label(imgs[i], 1)) * s.pixel_pitch * s.pixel_pitch;
    EXPECT_NEAR(area, expect, 0.02 * expect) << d;
  }
}

TEST(SliceSeries, ThreadCountDoesNotChangeOutput) {
  LabeledMesh m = make_icosphere(40, 3, {}, 1);
  m.append(make_icosphere(15, 3, {5, 5, 0}, 2));
  SeriesSpec s;
  s.direction = {0.3, -0.2, 1};
  s.start = -35;
  s.interval = 7;
  s.count = 11;
  EXPECT_EQ(slice_series(m, s, 1), slice_series(m, s, 4));
}

TEST(SliceSeries, RigidMotionOfMeshAndPlaneKeepsTheImage) {
  LabeledMesh m = make_icosphere(40, 3, {}, 1);
  m.append(make_icosphere(15, 3, {10, 5, 0}, 2));
  const auto plane = make_slice_plane({0, 0, 8}, {0.2, 0.1, 1}, 1, 100, 100);
  const auto ref = slice_annotation(m, plane);

  const auto R = rotation_matrix({1, -2, 0.5}, 0.7);
  const Vec3 shift{13, -4, 22};
  LabeledMesh moved = m;
  moved.transform(R, shift);
  SlicePlane p2 = plane;
  p2.origin = rotate(R, plane.origin) + shift;
  p2.normal = rotate(R, plane.normal);
  p2.u = rotate(R, plane.u);
  p2.v = rotate(R, plane.v);
  const auto img = slice_annotation(moved, p2);
  // Mismatches may only sit on a region boundary of the reference.
  for (int y = 1; y + 1 < ref.height; ++y)
    for (int x = 1; x + 1 < ref.width; ++x) {
      if (img.at(x, y) == ref.at(x, y)) continue;
      bool boundary = false;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) boundary |= ref.at(x + dx, y + dy) != ref.at(x, y);
      EXPECT_TRUE(boundary) << x << "," << y;
    }
}

TEST(SliceSeries, RemovingADisjointRegionLeavesOthersUnchanged) {
  LabeledMesh both = make_icosphere(20, 3, {-30, 0, 0}, 1);
  both.append(make_icosphere(20, 3, {30, 0, 0}, 2));
  const auto only = make_icosphere(20, 3, {-30, 0, 0}, 1);
  const auto plane = make_slice_plane({0, 0, 4}, {0, 0.1, 1}, 1, 120, 60);
  EXPECT_EQ(count_label(slice_annotation(both, plane), 1), count_label(slice_annotation(only, plane), 1));
}

TEST(SliceSeries, HundredSlicesOfFiftyThousandTriangles) {
  LabeledMesh m = make_icosphere(100, 5, {}, 1);
  m.append(make_icosphere(60, 5, {10, 0, 0}, 2));
  m.append(make_icosphere(30, 5, {20, 10, 5}, 3));
  ASSERT_GE(m.size(), 50000u);
  SeriesSpec s;
  s.direction = {0.1, 0.2, 1};
  s.start = -99;
  s.interval = 2;
  s.count = 100;
  const auto t0 = std::chrono::steady_clock::now();
  const auto imgs = slice_series(m, s);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(imgs.size(), 100u);
  EXPECT_LT(secs, 5.0);
}

TEST(MeshIo, ObjRoundTrip) {
  LabeledMesh m = make_icosphere(10, 1, {}, 3);
  m.append(make_box({20, 0, 0}, {25, 5, 5}, 7));
  m.regions[3] = {3, "cortex", {10, 20, 30}};
  m.regions[7] = {7, "7", {1, 1, 1}};
  const auto dir = std::filesystem::temp_directory_path() / "slicereg_mesh_io";
  std::filesystem::create_directories(dir);
  write_obj((dir / "m.obj").string(), m);
  write_region_table((dir / "m.json").string(), m.regions);
  const auto table = read_region_table((dir / "m.json").string());
  EXPECT_EQ(table, m.regions);
  const auto back = read_obj((dir / "m.obj").string(), table);
  EXPECT_EQ(back.vertices, m.vertices);
  EXPECT_EQ(back.size(), m.size());
  EXPECT_TRUE(back.edge_closed(3));
  EXPECT_TRUE(back.edge_closed(7));
  std::multiset<int> a(m.region_of.begin(), m.region_of.end()), b(back.region_of.begin(), back.region_of.end());
  EXPECT_EQ(a, b);
  EXPECT_THROW(read_obj((dir / "missing.obj").string(), table), Error);
  {
    std::ofstream bad(dir / "bad.obj");
    bad << "v 0 0 0\ng nowhere\nf 1 1 1\n";
  }
  EXPECT_THROW(read_obj((dir / "bad.obj").string(), table), Error);
}
