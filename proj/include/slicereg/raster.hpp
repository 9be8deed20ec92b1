#pragma once

// Image containers and the smoothing / gradient filters that feed edge
// detection. Pixel (x, y) has its center at integer coordinates (x, y);
// borders are handled by edge replication everywhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "slicereg/error.hpp"

namespace slicereg {

struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  RasterImage() = default;
  RasterImage(int w, int h, int c = 1, std::uint8_t fill = 0) : width(w), height(h), channels(c) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidArgument, "image dimensions must be positive");
    if (c != 1 && c != 3) fail(ErrorCode::InvalidArgument, "channels must be 1 or 3");
    samples.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t& at(int x, int y, int c = 0) { return samples[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c = 0) const { return samples[index(x, y, c)]; }
  std::uint8_t clamped(int x, int y, int c = 0) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1), c);
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

struct ScalarField {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidArgument, "field dimensions must be positive");
    values.assign(static_cast<std::size_t>(w) * h, fill);
  }

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  double& at(int x, int y) { return values[index(x, y)]; }
  double at(int x, int y) const { return values[index(x, y)]; }
  double clamped(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }

  /// Bilinear sample with edge replication.
  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height - 1));
    const int x0 = std::min(static_cast<int>(x), width - 1);
    const int y0 = std::min(static_cast<int>(y), height - 1);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fy) * ((1 - fx) * at(x0, y0) + fx * at(x1, y0)) +
           fy * ((1 - fx) * at(x0, y1) + fx * at(x1, y1));
  }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;
};

struct Histogram {
  std::vector<double> bin_edges;  // bins + 1 entries
  std::vector<std::size_t> counts;

  std::size_t bins() const { return counts.size(); }
  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
  /// Bin index of `v` under the uniform layout; the maximum lands in the last bin.
  std::size_t bin_of(double v) const {
    const double lo = bin_edges.front();
    const double hi = bin_edges.back();
    const auto b = counts.size();
    if (hi <= lo) return 0;
    auto i = static_cast<std::ptrdiff_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(b)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(b) - 1));
  }
};

// Offsets covered by a window of side `window`: even windows put the extra
// sample on the +x / +y side.
inline std::pair<int, int> window_offsets(int window) { return {-(window - 1) / 2, window / 2}; }

inline RasterImage extract_channel(const RasterImage& img, int channel) {
  if (channel < 0 || channel >= img.channels) fail(ErrorCode::InvalidArgument, "channel out of range");
  RasterImage out(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, y, channel);
  return out;
}

inline ScalarField to_field(const RasterImage& img) {
  if (img.channels != 1) fail(ErrorCode::InvalidArgument, "expected a single-channel image");
  ScalarField f(img.width, img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) f.values[i] = img.samples[i];
  return f;
}

inline RasterImage to_raster(const ScalarField& f) {
  RasterImage out(f.width, f.height, 1);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    out.samples[i] = static_cast<std::uint8_t>(std::clamp(std::lround(f.values[i]), 0L, 255L));
  return out;
}

/// Box-averaged downsample by an integer factor (partial blocks at the
/// right/bottom edge are averaged over the pixels they contain).
inline RasterImage downsample(const RasterImage& img, int factor) {
  if (factor < 1) fail(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  if (factor == 1) return img;
  const int w = (img.width + factor - 1) / factor;
  const int h = (img.height + factor - 1) / factor;
  RasterImage out(w, h, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) {
        int sum = 0, n = 0;
        for (int yy = y * factor; yy < std::min(img.height, (y + 1) * factor); ++yy)
          for (int xx = x * factor; xx < std::min(img.width, (x + 1) * factor); ++xx) {
            sum += img.at(xx, yy, c);
            ++n;
          }
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
      }
  return out;
}

/// Median of each window x window neighbourhood. For even sample counts the
/// lower median is returned. Runs a sliding 256-bin histogram per row.
inline RasterImage median_filter(const RasterImage& img, int window) {
  if (img.channels != 1) fail(ErrorCode::InvalidArgument, "median_filter expects a single-channel image");
  if (window < 1 || window > std::min(img.width, img.height))
    fail(ErrorCode::InvalidWindow, "window " + std::to_string(window) + " does not fit the image");
  if (window == 1) return img;
  const auto [lo, hi] = window_offsets(window);
  const int rank = (window * window - 1) / 2;
  RasterImage out(img.width, img.height, 1);
  std::array<int, 256> hist{};
  for (int y = 0; y < img.height; ++y) {
    hist.fill(0);
    for (int dy = lo; dy <= hi; ++dy)
      for (int dx = lo; dx <= hi; ++dx) ++hist[img.clamped(dx, y + dy)];
    for (int x = 0;; ++x) {
      int seen = 0;
      int v = 0;
      for (; v < 256; ++v) {
        seen += hist[v];
        if (seen > rank) break;
      }
      out.at(x, y) = static_cast<std::uint8_t>(v);
      if (x + 1 == img.width) break;
      for (int dy = lo; dy <= hi; ++dy) {
        --hist[img.clamped(x + lo, y + dy)];
        ++hist[img.clamped(x + 1 + hi, y + dy)];
      }
    }
  }
  return out;
}

/// Sampled, renormalised 1D Gaussian over the window offsets. The 2D kernel
/// is the outer product of this with itself.
inline std::vector<double> gaussian_kernel_1d(double sigma, int window) {
  if (!(sigma > 0)) fail(ErrorCode::InvalidSigma, "sigma must be positive");
  if (window < 1) fail(ErrorCode::InvalidWindow, "window must be >= 1");
  const auto [lo, hi] = window_offsets(window);
  std::vector<double> k;
  double sum = 0;
  for (int d = lo; d <= hi; ++d) {
    k.push_back(std::exp(-0.5 * d * d / (sigma * sigma)));
    sum += k.back();
  }
  for (auto& v : k) v /= sum;
  return k;
}

inline ScalarField gaussian_smooth(const ScalarField& f, double sigma, int window) {
  const auto k = gaussian_kernel_1d(sigma, window);
  const int lo = window_offsets(window).first;
  ScalarField tmp(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0;
      for (std::size_t i = 0; i < k.size(); ++i) acc += k[i] * f.clamped(x + lo + static_cast<int>(i), y);
      tmp.at(x, y) = acc;
    }
  ScalarField out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0;
      for (std::size_t i = 0; i < k.size(); ++i) acc += k[i] * tmp.clamped(x, y + lo + static_cast<int>(i));
      out.at(x, y) = acc;
    }
  return out;
}

inline RasterImage gaussian_filter(const RasterImage& img, double sigma, int window) {
  return to_raster(gaussian_smooth(to_field(img), sigma, window));
}

struct Gradient {
  ScalarField gx;
  ScalarField gy;
  ScalarField magnitude;
};

/// 3x3 Sobel derivatives with replicated borders.
inline Gradient sobel(const ScalarField& f) {
  if (f.width < 3 || f.height < 3) fail(ErrorCode::TooSmall, "gradient needs at least a 3x3 image");
  Gradient g{ScalarField(f.width, f.height), ScalarField(f.width, f.height), ScalarField(f.width, f.height)};
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const double a = f.clamped(x - 1, y - 1), b = f.clamped(x, y - 1), c = f.clamped(x + 1, y - 1);
      const double d = f.clamped(x - 1, y), e = f.clamped(x + 1, y);
      const double g0 = f.clamped(x - 1, y + 1), h = f.clamped(x, y + 1), i = f.clamped(x + 1, y + 1);
      const double gx = (c + 2 * e + i) - (a + 2 * d + g0);
      const double gy = (g0 + 2 * h + i) - (a + 2 * b + c);
      g.gx.at(x, y) = gx;
      g.gy.at(x, y) = gy;
      g.magnitude.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  return g;
}

inline ScalarField gradient_magnitude(const RasterImage& img) { return sobel(to_field(img)).magnitude; }

/// Uniform bins over [min, max] of the values.
inline Histogram build_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 1) fail(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  if (values.empty()) fail(ErrorCode::InvalidArgument, "histogram of an empty set");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (!(*mx > *mn)) fail(ErrorCode::DegenerateRange, "all values are equal");
  Histogram h;
  h.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.bin_edges[i] = *mn + (*mx - *mn) * static_cast<double>(i) / static_cast<double>(bins);
  h.bin_edges.back() = *mx;
  h.counts.assign(bins, 0);
  for (double v : values) ++h.counts[h.bin_of(v)];
  return h;
}

inline Histogram build_histogram(const ScalarField& field, std::size_t bins) {
  return build_histogram(std::span<const double>(field.values), bins);
}

}  // namespace slicereg
