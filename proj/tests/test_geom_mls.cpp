#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "slicereg/geom/mls.hpp"

using namespace slicereg;

TEST(MlsNormals, StraightLineGivesConsistentVerticalNormals) {
  std::vector<Vec2> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({static_cast<double>(i), 5.0});
  std::vector<Vec2> ref(pts.size(), Vec2{0, 1});
  const auto est = mls_normals(pts, 4.0, ref);
  EXPECT_EQ(est.invalid_count(), 0u);
  for (auto n : est.normals) {
    EXPECT_NEAR(n.x, 0.0, 1e-12);
    EXPECT_NEAR(n.y, 1.0, 1e-12);
  }
}

TEST(MlsNormals, CircleNormalsAreRadial) {
  std::vector<Vec2> pts;
  const Vec2 c{300, 200};
  for (int i = 0; i < 628; ++i) {
    const double a = 2 * std::numbers::pi * i / 628.0;
    pts.push_back(c + 100.0 * Vec2{std::cos(a), std::sin(a)});
  }
  const auto est = mls_normals(pts, 10.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ASSERT_TRUE(est.valid[i]);
    EXPECT_LT(angle_between_deg(est.normals[i], pts[i] - c), 2.0);
  }
}

TEST(MlsNormals, NoisyLineWithinFiveDegrees) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<Vec2> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({i * 0.5, 10 + noise(rng)});
  std::vector<Vec2> ref(pts.size(), Vec2{0, 1});
  const auto est = mls_normals(pts, 10.0, ref);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // The fit window is one-sided at the ends, so judge the interior.
    if (pts[i].x < 10 || pts[i].x > 190) continue;
    EXPECT_LT(angle_between_deg(est.normals[i], {0, 1}), 5.0) << i;
  }
}

TEST(MlsNormals, ScaleInvariantDirection) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<Vec2> pts, scaled;
  for (int i = 0; i < 200; ++i) {
    const double a = 2 * std::numbers::pi * i / 200.0;
    pts.push_back({40 * std::cos(a) + u(rng), 25 * std::sin(a) + u(rng)});
  }
  for (auto p : pts) scaled.push_back(3.7 * p);
  const auto a = mls_normals(pts, 6.0), b = mls_normals(scaled, 3.7 * 6.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(a.normals[i].x, b.normals[i].x, 1e-6);
    EXPECT_NEAR(a.normals[i].y, b.normals[i].y, 1e-6);
  }
}

TEST(MlsNormals, IsolatedPointIsFlagged) {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {2, 0}, {100, 100}};
  const auto est = mls_normals(pts, 3.0);
  EXPECT_FALSE(est.valid[3]);
  EXPECT_EQ(est.invalid_count(), 1u);
  try {
    mls_normal_at(pts, 3, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IsolatedPoint);
  }
}
