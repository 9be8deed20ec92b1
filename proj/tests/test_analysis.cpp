#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "slicereg/analysis/metrics.hpp"
#include "slicereg/analysis/neurons.hpp"
#include "slicereg/analysis/phantom.hpp"
#include "slicereg/analysis/phantom_profile.hpp"
#include "slicereg/analysis/transfer.hpp"

using namespace slicereg;

namespace {

// Paints `area` red pixels as a compact row-major block starting at (x0, y0), `cols` wide.
void paint_blob(RasterImage& img, int x0, int y0, int area, int cols) {
  for (int i = 0; i < area; ++i) img.at(x0 + i % cols, y0 + i / cols, 0) = 255;
}

AnnotatedSliceImage halves(int w, int h, int left, int right) {
  AnnotatedSliceImage l(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) l.at(x, y) = x < w / 2 ? left : right;
  l.regions[left] = {left, "L", {1, 1, 1}};
  l.regions[right] = {right, "R", {2, 2, 2}};
  return l;
}

}  // namespace

// ---------------------------------------------------------------- metrics

TEST(LandmarkErrors, WorkedExamples) {
  LandmarkSet same{{{1, 2}, {3, 4}}, {{1, 2}, {3, 4}}};
  const auto z = landmark_errors(same);
  EXPECT_EQ(z.rmse, 0);
  EXPECT_EQ(z.mee, 0);
  EXPECT_EQ(z.mae, 0);

  LandmarkSet off{{{0, 0}, {10, 10}, {-4, 7}}, {{3, 4}, {13, 14}, {-1, 11}}};
  const auto f = landmark_errors(off);
  EXPECT_DOUBLE_EQ(f.rmse, 5);
  EXPECT_DOUBLE_EQ(f.mee, 5);
  EXPECT_DOUBLE_EQ(f.mae, 5);

  LandmarkSet d{{{0, 0}, {0, 0}, {0, 0}}, {{0, 0}, {3, 4}, {6, 8}}};
  const auto e = landmark_errors(d);
  EXPECT_NEAR(e.rmse, std::sqrt(125.0 / 3), 1e-12);
  EXPECT_DOUBLE_EQ(e.mee, 5);
  EXPECT_DOUBLE_EQ(e.mae, 10);

  try {
    landmark_errors(LandmarkSet{});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::EmptyLandmarks);
  }
}

TEST(LandmarkErrors, OrderingInvariantsOnRandomSets) {
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> ex(0.3);
  std::uniform_int_distribution<int> n(1, 30);
  for (int k = 0; k < 500; ++k) {
    LandmarkSet lm;
    for (int i = n(rng); i > 0; --i) {
      lm.a.push_back({ex(rng), ex(rng)});
      lm.b.push_back({ex(rng), ex(rng)});
    }
    const auto s = landmark_errors(lm);
    EXPECT_LE(s.mee, s.mae);
    EXPECT_LE(s.rmse, s.mae + 1e-12);
    EXPECT_GE(s.mee, 0);
  }
}

TEST(LandmarkErrors, CsvRoundTrip) {
  LandmarkSet lm{{{0.125, 3}, {1e-7, -2.5}}, {{7, 8.333333333333334}, {9, 10}}};
  const auto path = (std::filesystem::temp_directory_path() / "slicereg_landmarks.csv").string();
  write_landmarks_csv(path, lm);
  EXPECT_EQ(read_landmarks_csv(path), lm);
}

// ---------------------------------------------------------------- phantom

TEST(Phantom, SameSeedIsBitIdentical) {
  PhantomConfig cfg;
  cfg.warp_amplitude = 8;
  const auto a = generate_phantom(cfg, 77), b = generate_phantom(cfg, 77);
  EXPECT_EQ(a.mi, b.mi);
  EXPECT_EQ(a.ai, b.ai);
  EXPECT_EQ(a.truth_field, b.truth_field);
  EXPECT_EQ(a.landmarks, b.landmarks);
  EXPECT_EQ(a.truth_affine.m, b.truth_affine.m);
  EXPECT_NE(a.mi, generate_phantom(cfg, 78).mi);
}

TEST(Phantom, ZeroAmplitudeIdentityIsTheCleanRendering) {
  PhantomConfig cfg;
  cfg.warp_amplitude = 0;
  cfg.rotation_deg = cfg.scale_jitter = cfg.translation = 0;
  cfg.noise_sigma = 0;
  cfg.supersample = 1;
  const auto ph = generate_phantom(cfg, 3);
  for (double v : ph.truth_field.phi_x.values) EXPECT_EQ(v, 0);
  for (double v : ph.truth_field.phi_y.values) EXPECT_EQ(v, 0);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      ASSERT_EQ(ph.mi.at(x, y), static_cast<std::uint8_t>(region_intensity(ph.ai.at(x, y))));
}

TEST(Phantom, LandmarksFollowTheTruthMap) {
  PhantomConfig cfg;
  cfg.warp_amplitude = 15;
  const auto ph = generate_phantom(cfg, 5);
  ASSERT_EQ(ph.landmarks.size(), 20u);
  for (std::size_t i = 0; i < ph.landmarks.size(); ++i)
    EXPECT_LT(distance(ph.to_atlas(ph.landmarks.a[i]), ph.landmarks.b[i]), 1e-6);
}

TEST(Phantom, JacobianIsPositiveAndFoldOverIsRejected) {
  PhantomConfig cfg;
  cfg.warp_amplitude = 15;
  const auto ph = generate_phantom(cfg, 2);
  // Independent audit with forward differences on the stored field.
  const auto& fx = ph.truth_field.phi_x;
  const auto& fy = ph.truth_field.phi_y;
  double worst = 1e9;
  for (int y = 0; y + 1 < cfg.height; ++y)
    for (int x = 0; x + 1 < cfg.width; ++x) {
      const double a = 1 + fx.at(x + 1, y) - fx.at(x, y), b = fx.at(x, y + 1) - fx.at(x, y);
      const double c = fy.at(x + 1, y) - fy.at(x, y), d = 1 + fy.at(x, y + 1) - fy.at(x, y);
      worst = std::min(worst, a * d - b * c);
    }
  EXPECT_GT(worst, 0);

  cfg.warp_amplitude = 200;
  cfg.warp_wavelength = 64;
  try {
    generate_phantom(cfg, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidPhantomConfig);
  }
}

TEST(Phantom, TearMaskMatchesTheWedgeArea) {
  PhantomConfig cfg;
  cfg.rotation_deg = cfg.scale_jitter = cfg.translation = 0;
  const auto ph = generate_phantom(cfg, 1);
  const auto same = inject_tear(ph, TearSpec{-1, 0, 20, -20});
  EXPECT_TRUE(same.tear_mask.empty());
  EXPECT_EQ(same.mi, ph.mi);

  const auto torn = inject_tear(ph, TearSpec{-1, 80, 20, -20});
  std::size_t area = 0;
  for (auto v : torn.tear_mask) area += v;
  EXPECT_NEAR(double(area), 0.5 * 80 * 20, 0.1 * 0.5 * 80 * 20);
  EXPECT_EQ(torn.ai, ph.ai);
  EXPECT_THROW(inject_tear(ph, TearSpec{-1, 400, 20, -20}), Error);
  EXPECT_THROW(inject_tear(ph, TearSpec{0, 10, 20, -20}), Error);
}

TEST(Phantom, OneSidedTearBreaksTheSymmetry) {
  PhantomConfig cfg;
  cfg.rotation_deg = cfg.scale_jitter = cfg.translation = 0;
  cfg.noise_sigma = 0;
  const auto ph = generate_phantom(cfg, 1);
  const auto torn = inject_tear(ph, TearSpec{-1, 80, 20, -20});
  EXPECT_LT(mirror_difference(ph.mi), 0.05);
  // Each torn pixel differs from its intact mirror twice in the sum.
  double expect = 0;
  for (int y = 0; y < ph.mi.height; ++y)
    for (int x = 0; x < ph.mi.width; ++x)
      if (torn.torn(x, y)) expect += 2 * std::abs(double(ph.mi.at(x, y)) - double(torn.mi.at(x, y)));
  expect /= double(ph.mi.width) * ph.mi.height;
  EXPECT_GT(expect, 0.3);
  EXPECT_NEAR(mirror_difference(torn.mi) - mirror_difference(ph.mi), expect, 0.05);
}

// ---------------------------------------------------------------- neurons

TEST(CountNeurons, NoSaturatedRedCountsNothing) {
  RasterImage img(32, 32, 3, 0);
  for (auto& s : img.samples) s = 254;
  const auto r = count_neurons(img, halves(32, 32, 1, 2));
  EXPECT_EQ(r.total(), 0);
  EXPECT_TRUE(r.clusters.empty());
  EXPECT_TRUE(r.counts.empty());
}

TEST(CountNeurons, ThreeEqualBlobsCountThree) {
  RasterImage img(40, 20, 3, 0);
  paint_blob(img, 2, 2, 10, 5);
  paint_blob(img, 2, 10, 10, 5);
  paint_blob(img, 12, 5, 10, 2);
  const auto r = count_neurons(img, halves(40, 20, 1, 2));
  EXPECT_EQ(r.median_area, 10);
  EXPECT_EQ(r.counts.at(1), 3);
  EXPECT_EQ(r.total(), 3);
}

TEST(CountNeurons, MedianMultiplicityCase) {
  RasterImage img(60, 30, 3, 0);
  paint_blob(img, 2, 2, 10, 5);
  paint_blob(img, 2, 10, 10, 5);
  paint_blob(img, 40, 5, 24, 6);
  const auto r = count_neurons(img, halves(60, 30, 1, 2));
  EXPECT_EQ(r.median_area, 10);
  ASSERT_EQ(r.clusters.size(), 3u);
  std::vector<int> mult;
  for (const auto& c : r.clusters) mult.push_back(c.multiplicity);
  std::sort(mult.begin(), mult.end());
  EXPECT_EQ(mult, (std::vector<int>{1, 1, 3}));
  EXPECT_EQ(r.total(), 5);
  EXPECT_EQ(r.counts.at(1), 2);
  EXPECT_EQ(r.counts.at(2), 3);
}

TEST(CountNeurons, ClustersBelowFivePixelsAreDiscarded) {
  RasterImage img(40, 20, 3, 0);
  paint_blob(img, 2, 2, 4, 2);   // dropped
  paint_blob(img, 10, 2, 5, 5);  // kept
  paint_blob(img, 20, 2, 1, 1);  // dropped
  const auto r = count_neurons(img, halves(40, 20, 1, 2));
  EXPECT_EQ(r.discarded, 2u);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].area, 5u);
  EXPECT_EQ(r.total(), 1);
}

TEST(CountNeurons, DiagonalPixelsAreConnected) {
  RasterImage img(20, 20, 3, 0);
  for (int i = 0; i < 6; ++i) img.at(3 + i, 3 + i, 0) = 255;
  const auto r = count_neurons(img, halves(20, 20, 1, 2));
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].area, 6u);
}

TEST(CountNeurons, CentroidDecidesTheRegionAndBackgroundIsUnassigned) {
  RasterImage img(40, 20, 3, 0);
  paint_blob(img, 17, 5, 10, 5);  // spans the split, centroid x = 19 -> left
  paint_blob(img, 30, 12, 10, 5);
  auto labels = halves(40, 20, 1, 2);
  for (int y = 10; y < 20; ++y)
    for (int x = 28; x < 40; ++x) labels.at(x, y) = 0;
  const auto r = count_neurons(img, labels);
  EXPECT_EQ(r.counts.at(1), 1);
  EXPECT_EQ(r.counts.count(2), 0u);
  EXPECT_EQ(r.unassigned, 1);
  long sum = 0;
  for (const auto& c : r.clusters) sum += c.multiplicity;
  EXPECT_EQ(sum, r.total());
}

TEST(CountNeurons, TotalIsInvariantUnderRelabeling) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pos(0, 90), area(1, 40);
  RasterImage img(100, 100, 3, 0);
  for (int k = 0; k < 40; ++k) paint_blob(img, pos(rng), pos(rng), area(rng) / 5 + 1, 3);
  AnnotatedSliceImage a(100, 100), b(100, 100);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) {
      const int l = 1 + (x / 25 + 4 * (y / 25)) % 5;
      a.at(x, y) = l;
      b.at(x, y) = 6 - l;
    }
  const auto ra = count_neurons(img, a), rb = count_neurons(img, b);
  EXPECT_EQ(ra.total(), rb.total());
  for (const auto& [id, c] : ra.counts) EXPECT_EQ(rb.counts.at(6 - id), c);
}

TEST(CountNeurons, RejectsGrayImagesAndMismatchedLabels) {
  EXPECT_THROW(count_neurons(RasterImage(8, 8, 1), AnnotatedSliceImage(8, 8)), Error);
  EXPECT_THROW(count_neurons(RasterImage(8, 8, 3), AnnotatedSliceImage(9, 8)), Error);
}

// ---------------------------------------------------------------- transfer

TEST(TransferAnnotations, IdentityCopiesAndTranslationShifts) {
  AnnotatedSliceImage ai(30, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x) ai.at(x, y) = (x * 7 + y * 3) % 5;
  const DisplacementField zero(30, 20, 4);
  const auto same = transfer_annotations(ai, Affine2::identity(), zero, 30, 20);
  EXPECT_EQ(same.labels, ai.labels);
  EXPECT_EQ(transfer_annotations(same, Affine2::identity(), zero, 30, 20).labels, same.labels);

  const auto moved = transfer_annotations(ai, Affine2::translation({3, -2}), zero, 30, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x) {
      const int sx = x + 3, sy = y - 2;
      const int expect = ai.contains(sx, sy) ? ai.at(sx, sy) : 0;
      ASSERT_EQ(moved.at(x, y), expect);
    }
}

TEST(TransferAnnotations, RegisteredPhantomLabelsAgree) {
  PhantomConfig cfg;
  cfg.warp_amplitude = 5;
  const auto ph = generate_phantom(cfg, 21);
  RegistrationParams p;
  p.edges = phantom_edge_params();
  p.damage = phantom_damage_params();
  const auto reg = register_slice(ph.mi, ph.ai, p);
  const auto labels = transfer_annotations(ph.ai, reg, ph.mi.width, ph.mi.height);
  std::size_t tissue = 0, agree = 0;
  for (int y = 0; y < ph.mi.height; ++y)
    for (int x = 0; x < ph.mi.width; ++x) {
      const int truth = ph.layout.label(ph.to_atlas({double(x), double(y)}));
      if (truth == 0) continue;
      ++tissue;
      agree += labels.at(x, y) == truth;
    }
  EXPECT_GE(double(agree) / double(tissue), 0.98);
}
