#pragma once

// Synthetic atlas / microscope slice pairs with known ground truth. The atlas
// is a set of nested, left-right symmetric ellipses with symmetric lateral
// notches; the microscope image is that layout seen through a known affine
// map and a smooth sinusoidal warp, plus noise.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "slicereg/annotation.hpp"
#include "slicereg/analysis/metrics.hpp"
#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/raster.hpp"
#include "slicereg/reg/affine.hpp"
#include "slicereg/reg/field.hpp"

namespace slicereg {

struct PhantomConfig {
  int width = 512;
  int height = 512;
  double tissue_rx = 160;
  double tissue_ry = 210;
  double notch_depth = 30;   // symmetric lateral notches; 0 disables them
  double notch_width = 16;
  double notch_offset_y = 20;
  double rotation_deg = 5;   // affine draws are uniform in +-these
  double scale_jitter = 0.05;
  double translation = 10;
  double shear = 0;
  double warp_amplitude = 0;     // px, bound on each displacement component
  double warp_wavelength = 512;  // px
  double noise_sigma = 3;
  double texture = 0;            // relative amplitude of smooth shading
  int landmarks = 20;
  int supersample = 2;
};

struct TearSpec {
  int side = -1;            // -1: low-x side of the atlas midline, +1: high-x side
  double depth = 80;        // px, measured inward from the tissue boundary
  double width = 20;        // px, opening at the boundary
  double offset_y = -20;    // atlas y relative to the tissue center
};

struct EllipseRegion {
  int id;
  Vec2 center;
  double rx, ry;
  bool contains(Vec2 p) const {
    const double dx = (p.x - center.x) / rx, dy = (p.y - center.y) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
  Vec2 point_at(double t) const { return center + Vec2{rx * std::cos(t), ry * std::sin(t)}; }
};

struct Triangle2 {
  Vec2 a, b, c;
  bool contains(Vec2 p) const {
    const double d1 = orient(a, b, p), d2 = orient(b, c, p), d3 = orient(c, a, p);
    const bool neg = d1 < 0 || d2 < 0 || d3 < 0, pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(neg && pos);
  }
};

/// The analytic atlas layout.
struct PhantomLayout {
  EllipseRegion tissue;
  std::vector<EllipseRegion> regions;  // painted in order over the tissue
  std::vector<Triangle2> notches;      // background wedges cut from the tissue
  RegionTable table;

  int label(Vec2 p) const {
    if (!tissue.contains(p)) return 0;
    for (const auto& n : notches)
      if (n.contains(p)) return 0;
    int l = tissue.id;
    for (const auto& r : regions)
      if (r.contains(p)) l = r.id;
    return l;
  }

  /// Tissue half width at atlas row y (0 outside the tissue's vertical span).
  double half_width(double y) const {
    const double t = (y - tissue.center.y) / tissue.ry;
    return std::abs(t) >= 1 ? 0.0 : tissue.rx * std::sqrt(1 - t * t);
  }

  /// Wedge opening `width` at the tissue boundary on `side`, apex `depth`
  /// inside. The base is pushed outside the tissue so the cut opens cleanly.
  Triangle2 lateral_wedge(int side, double depth, double width, double offset_y) const {
    const double y0 = tissue.center.y + offset_y;
    const double xb = tissue.center.x + side * half_width(y0);
    const double extra = 4.0;
    const double half = 0.5 * width * (depth + extra) / depth;
    const Vec2 apex{xb - side * depth, y0};
    const Vec2 b0{xb + side * extra, y0 - half}, b1{xb + side * extra, y0 + half};
    return side < 0 ? Triangle2{apex, b1, b0} : Triangle2{apex, b0, b1};
  }
};

inline PhantomLayout make_layout(const PhantomConfig& cfg) {
  PhantomLayout L;
  const Vec2 c{0.5 * (cfg.width - 1), 0.5 * (cfg.height - 1)};
  const double sx = cfg.tissue_rx / 160.0, sy = cfg.tissue_ry / 210.0;
  L.tissue = {1, c, cfg.tissue_rx, cfg.tissue_ry};
  auto at = [&](double dx, double dy) { return c + Vec2{dx * sx, dy * sy}; };
  L.regions = {
      {2, at(0, 40), 70 * sx, 100 * sy},    // central body
      {3, at(-90, -100), 35 * sx, 45 * sy}, // upper lateral pair
      {4, at(90, -100), 35 * sx, 45 * sy},
      {5, at(0, 60), 30 * sx, 35 * sy},     // nested in the central body
      {6, at(-95, 110), 22 * sx, 30 * sy},  // lower lateral pair
      {7, at(95, 110), 22 * sx, 30 * sy},
  };
  if (cfg.notch_depth > 0)
    for (int side : {-1, 1})
      L.notches.push_back(L.lateral_wedge(side, cfg.notch_depth, cfg.notch_width, cfg.notch_offset_y));
  const std::array<const char*, 7> names{"tissue", "central", "upper-left", "upper-right", "core", "lower-left",
                                         "lower-right"};
  const std::array<std::array<std::uint8_t, 3>, 7> colors{{{200, 200, 200},
                                                           {80, 160, 220},
                                                           {230, 120, 60},
                                                           {230, 160, 60},
                                                           {120, 200, 90},
                                                           {170, 90, 200},
                                                           {200, 90, 170}}};
  for (int i = 0; i < 7; ++i) L.table[i + 1] = {i + 1, names[i], colors[i]};
  return L;
}

/// Gray level per region; neighbouring regions differ by at least 40.
inline double region_intensity(int label) {
  static constexpr std::array<double, 8> v{20, 140, 190, 90, 90, 240, 60, 60};
  return label >= 0 && label < 8 ? v[label] : 20;
}

namespace detail {

/// Seeded stream with an explicitly defined normal sampler, so phantoms are
/// identical across standard libraries.
class PhantomRng {
 public:
  explicit PhantomRng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    double u1 = uniform();
    while (u1 <= 0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2 * std::log(u1)), t = 2 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

}  // namespace detail

/// u(q) = sum of two low-frequency sinusoid products per component; each
/// component is bounded by `amplitude`.
struct SinusoidWarp {
  double amplitude = 0;
  double wavelength = 512;
  std::array<double, 4> phase{};
  std::array<double, 2> tilt{};  // orientation of the oblique terms

  Vec2 operator()(Vec2 q) const {
    if (amplitude == 0) return {};
    const double k = 2 * std::numbers::pi / wavelength;
    const double ux = 0.5 * amplitude *
                      (std::sin(k * q.x + phase[0]) * std::cos(k * q.y + phase[1]) +
                       std::sin(k * (std::cos(tilt[0]) * q.x + std::sin(tilt[0]) * q.y) + phase[2]));
    const double uy = 0.5 * amplitude *
                      (std::cos(k * q.x + phase[1]) * std::sin(k * q.y + phase[3]) +
                       std::sin(k * (std::cos(tilt[1]) * q.x + std::sin(tilt[1]) * q.y) + phase[0]));
    return {ux, uy};
  }
};

struct Phantom {
  PhantomConfig config;
  std::uint64_t seed = 0;
  PhantomLayout layout;
  AnnotatedSliceImage ai;
  RasterImage mi;
  Affine2 truth_affine;          // atlas = truth_affine(q + u(q)) for microscope pixel q
  SinusoidWarp warp;
  DisplacementField truth_field; // u sampled on the microscope grid (grid factor 1)
  LandmarkSet landmarks;         // a: microscope, b: atlas
  std::vector<std::uint8_t> tear_mask;  // microscope grid; empty when untorn
  std::optional<TearSpec> tear;

  /// Microscope point -> atlas point.
  Vec2 to_atlas(Vec2 q) const { return truth_affine(q + warp(q)); }

  /// Atlas point -> microscope point (fixed-point inversion of the warp).
  Vec2 to_microscope(Vec2 b) const {
    const Vec2 r = truth_affine.inverse()(b);
    Vec2 q = r;
    for (int i = 0; i < 200; ++i) {
      const Vec2 next = r - warp(q);
      if (distance(next, q) < 1e-13) return next;
      q = next;
    }
    return q;
  }

  bool torn(int x, int y) const {
    return !tear_mask.empty() && tear_mask[static_cast<std::size_t>(y) * mi.width + x] != 0;
  }
};

namespace detail {

inline RasterImage render_microscope(const PhantomLayout& L, const PhantomConfig& cfg, const Affine2& A,
                                     const SinusoidWarp& warp, PhantomRng& rng, std::uint64_t texture_seed) {
  RasterImage mi(cfg.width, cfg.height, 1, 0);
  const int ss = std::max(1, cfg.supersample);
  PhantomRng tex_rng(texture_seed);
  const double tp0 = tex_rng.uniform(0, 2 * std::numbers::pi), tp1 = tex_rng.uniform(0, 2 * std::numbers::pi);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      double acc = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Vec2 q{x + (sx + 0.5) / ss - 0.5, y + (sy + 0.5) / ss - 0.5};
          acc += region_intensity(L.label(A(q + warp(q))));
        }
      double v = acc / (ss * ss);
      if (cfg.texture > 0) v *= 1 + cfg.texture * std::sin(0.031 * x + tp0) * std::sin(0.027 * y + tp1);
      v += cfg.noise_sigma * rng.normal();
      mi.at(x, y) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    }
  return mi;
}

}  // namespace detail

inline Phantom generate_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
  if (cfg.width < 16 || cfg.height < 16 || cfg.tissue_rx <= 0 || cfg.tissue_ry <= 0 || cfg.warp_wavelength <= 0 ||
      cfg.noise_sigma < 0 || cfg.warp_amplitude < 0 || cfg.landmarks < 0 || cfg.supersample < 1)
    fail(ErrorCode::InvalidPhantomConfig, "phantom configuration out of range");
  Phantom ph;
  ph.config = cfg;
  ph.seed = seed;
  ph.layout = make_layout(cfg);
  detail::PhantomRng rng(seed);

  const Vec2 c = ph.layout.tissue.center;
  const double theta = deg2rad(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg));
  const double s = 1 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter);
  const double sh = rng.uniform(-cfg.shear, cfg.shear);
  const Vec2 t{rng.uniform(-cfg.translation, cfg.translation), rng.uniform(-cfg.translation, cfg.translation)};
  const Affine2 lin{{s, s * sh, 0, 0, s, 0}};
  ph.truth_affine = Affine2::translation(c + t) * Affine2::rotation(theta) * lin * Affine2::translation(-c);

  ph.warp.amplitude = cfg.warp_amplitude;
  ph.warp.wavelength = cfg.warp_wavelength;
  for (auto& p : ph.warp.phase) p = rng.uniform(0, 2 * std::numbers::pi);
  for (auto& a : ph.warp.tilt) a = rng.uniform(0, std::numbers::pi);

  // Fold-over audit: central-difference Jacobian of q -> q + u(q) on the grid.
  ph.truth_field = DisplacementField(cfg.width, cfg.height, 1);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      const Vec2 q{double(x), double(y)};
      const Vec2 u = ph.warp(q);
      ph.truth_field.phi_x.at(x, y) = u.x;
      ph.truth_field.phi_y.at(x, y) = u.y;
      const Vec2 dx = 0.5 * (ph.warp(q + Vec2{1, 0}) - ph.warp(q - Vec2{1, 0}));
      const Vec2 dy = 0.5 * (ph.warp(q + Vec2{0, 1}) - ph.warp(q - Vec2{0, 1}));
      if ((1 + dx.x) * (1 + dy.y) - dx.y * dy.x <= 0)
        fail(ErrorCode::InvalidPhantomConfig, "warp folds over (non-positive Jacobian)");
    }

  ph.ai = AnnotatedSliceImage(cfg.width, cfg.height);
  ph.ai.regions = ph.layout.table;
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) ph.ai.at(x, y) = ph.layout.label({double(x), double(y)});

  const std::uint64_t texture_seed = seed ^ 0x9e3779b97f4a7c15ULL;
  ph.mi = detail::render_microscope(ph.layout, cfg, ph.truth_affine, ph.warp, rng, texture_seed);

  // Landmarks on region boundaries, away from notches.
  std::vector<EllipseRegion> boundaries{ph.layout.tissue};
  boundaries.insert(boundaries.end(), ph.layout.regions.begin(), ph.layout.regions.end());
  int guard = 0;
  while (static_cast<int>(ph.landmarks.size()) < cfg.landmarks && guard++ < 100000) {
    const auto& e = boundaries[static_cast<std::size_t>(rng.uniform() * boundaries.size()) % boundaries.size()];
    const Vec2 b = e.point_at(rng.uniform(0, 2 * std::numbers::pi));
    bool near_notch = false;
    for (const auto& n : ph.layout.notches)
      for (Vec2 d : {Vec2{0, 0}, Vec2{4, 0}, Vec2{-4, 0}, Vec2{0, 4}, Vec2{0, -4}})
        near_notch = near_notch || n.contains(b + d);
    if (near_notch) continue;
    const Vec2 a = ph.to_microscope(b);
    if (a.x < 2 || a.y < 2 || a.x > cfg.width - 3 || a.y > cfg.height - 3) continue;
    ph.landmarks.a.push_back(a);
    ph.landmarks.b.push_back(b);
  }
  return ph;
}

/// Carves a wedge from one lateral side of the microscope image (pixels set to
/// the background level) and records the torn pixels. Landmarks whose
/// microscope point falls in or next to the tear are dropped.
inline Phantom inject_tear(const Phantom& in, const TearSpec& spec) {
  if (spec.depth < 0 || spec.width < 0 || (spec.side != -1 && spec.side != 1))
    fail(ErrorCode::InvalidTearSpec, "tear depth and width must be non-negative and side must be -1 or +1");
  Phantom ph = in;
  ph.tear = spec;
  ph.tear_mask.assign(static_cast<std::size_t>(ph.mi.width) * ph.mi.height, 0);
  if (spec.depth == 0 || spec.width == 0) {
    ph.tear_mask.clear();
    return ph;
  }
  const auto& L = ph.layout;
  const double y0 = L.tissue.center.y + spec.offset_y;
  if (L.half_width(y0) <= spec.depth + 1 ||
      L.half_width(y0 - spec.width / 2) <= 0 || L.half_width(y0 + spec.width / 2) <= 0)
    fail(ErrorCode::InvalidTearSpec, "tear does not fit inside the tissue");
  const Triangle2 wedge = L.lateral_wedge(spec.side, spec.depth, spec.width, spec.offset_y);
  if (L.label(wedge.a) == 0) fail(ErrorCode::InvalidTearSpec, "tear apex lies outside the tissue");
  for (const auto& n : L.notches)
    if (n.contains(wedge.a) || n.contains(wedge.b) || n.contains(wedge.c) || wedge.contains(n.a) ||
        wedge.contains(n.b) || wedge.contains(n.c))
      fail(ErrorCode::InvalidTearSpec, "tear overlaps a notch");

  // The wedge is defined in atlas space and carried to the microscope image
  // through the true map, so it follows the same deformation as the tissue.
  const std::uint8_t bg = static_cast<std::uint8_t>(region_intensity(0));
  for (int y = 0; y < ph.mi.height; ++y)
    for (int x = 0; x < ph.mi.width; ++x) {
      const Vec2 b = ph.to_atlas({double(x), double(y)});
      if (wedge.contains(b) && L.label(b) != 0) {
        ph.tear_mask[static_cast<std::size_t>(y) * ph.mi.width + x] = 1;
        ph.mi.at(x, y) = bg;
      }
    }
  LandmarkSet kept;
  for (std::size_t i = 0; i < ph.landmarks.size(); ++i) {
    const Vec2 a = ph.landmarks.a[i];
    bool near = false;
    for (int dy = -3; dy <= 3 && !near; ++dy)
      for (int dx = -3; dx <= 3 && !near; ++dx) {
        const int x = static_cast<int>(std::lround(a.x)) + dx, y = static_cast<int>(std::lround(a.y)) + dy;
        near = ph.mi.contains(x, y) && ph.torn(x, y);
      }
    if (!near) {
      kept.a.push_back(a);
      kept.b.push_back(ph.landmarks.b[i]);
    }
  }
  ph.landmarks = kept;
  return ph;
}

/// Mean absolute difference between the image and its mirror across the
/// atlas midline (only meaningful for phantoms without warp or rotation).
inline double mirror_difference(const RasterImage& img) {
  double sum = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) sum += std::abs(double(img.at(x, y)) - double(img.at(img.width - 1 - x, y)));
  return sum / (static_cast<double>(img.width) * img.height);
}

}  // namespace slicereg
