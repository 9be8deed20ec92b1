#pragma once

#include <algorithm>
#include <cmath>

#include "slicereg/raster.hpp"
#include "slicereg/reg/affine.hpp"
#include "slicereg/reg/field.hpp"

namespace slicereg {

/// Bilinear sample of channel c; points outside [0, w-1] x [0, h-1] give 0.
inline double sample_or_zero(const RasterImage& img, double x, double y, int c = 0) {
  if (!(x >= 0 && y >= 0 && x <= img.width - 1 && y <= img.height - 1)) return 0.0;
  const int x0 = std::min(static_cast<int>(x), img.width - 1);
  const int y0 = std::min(static_cast<int>(y), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
         fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
}

inline std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)); }

/// Backward warp: output pixel p samples src at affine^-1(p - phi(p)). The
/// output has the field's full-resolution dimensions.
inline RasterImage apply_warp(const RasterImage& src, const Affine2& affine, const DisplacementField& field) {
  const Affine2 inv = affine.inverse();
  RasterImage out(field.width, field.height, src.channels, 0);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
      const Vec2 q = inv(p - field.at(p));
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = to_u8(sample_or_zero(src, q.x, q.y, c));
    }
  return out;
}

/// Pure affine resampling onto a width x height grid.
inline RasterImage resample_affine(const RasterImage& src, const Affine2& affine, int width, int height) {
  const Affine2 inv = affine.inverse();
  RasterImage out(width, height, src.channels, 0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Vec2 q = inv(Vec2{static_cast<double>(x), static_cast<double>(y)});
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = to_u8(sample_or_zero(src, q.x, q.y, c));
    }
  return out;
}

/// Where a source point lands under the warp: solves p = affine(q) + phi(p)
/// by fixed-point iteration.
inline Vec2 forward_map(Vec2 q, const Affine2& affine, const DisplacementField& field, int max_iter = 100) {
  const Vec2 base = affine(q);
  Vec2 p = base + field.at(base);
  for (int i = 0; i < max_iter; ++i) {
    const Vec2 next = base + field.at(p);
    if (distance(next, p) < 1e-9) return next;
    p = next;
  }
  return p;
}

}  // namespace slicereg
