#pragma once

// Dominant-edge detection for microscope slices, boundary extraction for
// atlas label images, and the outermost tissue contour.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "slicereg/annotation.hpp"
#include "slicereg/error.hpp"
#include "slicereg/geom/mls.hpp"
#include "slicereg/geom/vec2.hpp"
#include "slicereg/raster.hpp"

namespace slicereg {

struct EdgePointSet {
  std::vector<Vec2> points;
  std::vector<Vec2> normals;    // empty, or one unit vector per point
  std::vector<int> contour_id;  // empty, or one id per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return normals.size() == points.size() && !points.empty(); }

  EdgePointSet select(std::span<const std::size_t> idx) const {
    EdgePointSet out;
    for (auto i : idx) {
      out.points.push_back(points[i]);
      if (normals.size() == points.size()) out.normals.push_back(normals[i]);
      if (contour_id.size() == points.size()) out.contour_id.push_back(contour_id[i]);
    }
    return out;
  }
};

struct DedDiagnostics {
  double threshold = 0;      // K
  std::size_t bins = 0;      // b
  std::size_t stable_bins = 0;  // k
  std::size_t run_start = 0;    // first bin of the stable run
  double stability = 0;      // s
  bool otsu_fallback = false;
};

enum class BinRule {
  Count,  // Scott's expression read as a bin count, clamped to [8, 1024]
  Width,  // Scott's expression read as a bin width over [min, max]
};

/// b = round(3.49 * sigma * N^(-1/3)), clamped to [8, 1024].
inline std::size_t scott_bin_count(double sigma, std::size_t n) {
  if (n < 2) fail(ErrorCode::InvalidArgument, "Scott's rule needs at least two values");
  if (!(sigma > 0)) fail(ErrorCode::DegenerateDistribution, "zero spread");
  const double raw = 3.49 * sigma * std::pow(static_cast<double>(n), -1.0 / 3.0);
  return static_cast<std::size_t>(std::clamp(std::llround(raw), 8LL, 1024LL));
}

inline double population_stddev(std::span<const double> values) {
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

inline std::size_t scott_bin_count(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorCode::InvalidArgument, "Scott's rule needs at least two values");
  return scott_bin_count(population_stddev(values), values.size());
}

/// Bins spanning [min, max] when Scott's expression is read as a bin width.
inline std::size_t scott_width_bin_count(std::span<const double> values) {
  const double sigma = population_stddev(values);
  if (!(sigma > 0)) fail(ErrorCode::DegenerateDistribution, "zero spread");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double h = 3.49 * sigma * std::pow(static_cast<double>(values.size()), -1.0 / 3.0);
  return static_cast<std::size_t>(std::clamp(std::ceil((*mx - *mn) / h), 8.0, 4096.0));
}

struct StableRun {
  std::size_t start = 0;
  std::size_t length = 0;  // bins
};

/// First run (in increasing bin order) of at least two consecutive bins whose
/// neighbouring counts differ by at most `s`, extended as far as it goes.
inline std::optional<StableRun> first_stable_run(std::span<const std::size_t> counts, double s) {
  for (std::size_t i = 0; i + 1 < counts.size(); ++i) {
    auto diff = [&](std::size_t j) {
      return std::abs(static_cast<double>(counts[j + 1]) - static_cast<double>(counts[j]));
    };
    if (diff(i) > s) continue;
    std::size_t end = i + 1;
    while (end + 1 < counts.size() && diff(end) <= s) ++end;
    return StableRun{i, end - i + 1};
  }
  return std::nullopt;
}

/// Threshold K from the histogram of gradient magnitudes. `bins_override`
/// (when nonzero) replaces the bin rule.
inline DedDiagnostics dominant_edge_threshold(std::span<const double> grad, double s, BinRule rule = BinRule::Count,
                                              std::size_t bins_override = 0) {
  if (s < 0) fail(ErrorCode::InvalidArgument, "stability threshold must be non-negative");
  if (grad.size() < 2) fail(ErrorCode::DegenerateDistribution, "too few gradient samples");
  std::size_t bins = bins_override;
  if (bins == 0) bins = rule == BinRule::Count ? scott_bin_count(grad) : scott_width_bin_count(grad);
  Histogram hist;
  try {
    hist = build_histogram(grad, bins);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateRange) fail(ErrorCode::DegenerateDistribution, "all gradient values equal");
    throw;
  }
  const auto run = first_stable_run(hist.counts, s);
  if (!run) fail(ErrorCode::NoStableRegion, "no two adjacent histogram bins are within the stability threshold");
  double sum = 0;
  std::size_t n = 0;
  for (double v : grad) {
    const auto b = hist.bin_of(v);
    if (b >= run->start && b < run->start + run->length) {
      sum += v;
      ++n;
    }
  }
  DedDiagnostics d;
  // A run of empty bins has no samples to average; use the middle of its range.
  d.threshold = n ? sum / static_cast<double>(n)
                  : 0.5 * (hist.bin_edges[run->start] + hist.bin_edges[run->start + run->length]);
  d.bins = bins;
  d.stable_bins = run->length;
  d.run_start = run->start;
  d.stability = s;
  return d;
}

inline DedDiagnostics dominant_edge_threshold(const ScalarField& grad, double s, BinRule rule = BinRule::Count,
                                              std::size_t bins_override = 0) {
  return dominant_edge_threshold(std::span<const double>(grad.values), s, rule, bins_override);
}

/// Otsu's threshold over a 256-bin histogram of the values.
inline double otsu_threshold(std::span<const double> values) {
  const auto hist = build_histogram(values, 256);
  const double total = static_cast<double>(values.size());
  double sum_all = 0;
  for (std::size_t i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * static_cast<double>(hist.counts[i]);
  double w0 = 0, sum0 = 0, best = -1;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < 255; ++i) {
    w0 += static_cast<double>(hist.counts[i]);
    sum0 += static_cast<double>(i) * static_cast<double>(hist.counts[i]);
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_i = i;
    }
  }
  return hist.bin_edges[best_i + 1];
}

struct EdgeParams {
  int median_window = 20;
  int gaussian_window = 12;
  double gaussian_sigma = 2.0;
  double stability = 12;
  BinRule bin_rule = BinRule::Count;
  int channel = 1;  // used when the input has three channels (green)
  int downsample = 1;
};

struct EdgeDetection {
  EdgePointSet edges;
  DedDiagnostics diagnostics;
  ScalarField smoothed_magnitude;  // at working resolution
};

namespace detail {

/// 8-connected component id per set pixel, -1 elsewhere; ids in raster order.
inline std::vector<int> label_components(const std::vector<char>& mask, int w, int h, int& count) {
  std::vector<int> id(mask.size(), -1);
  count = 0;
  std::vector<int> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      if (!mask[i] || id[i] >= 0) continue;
      id[i] = count;
      stack.push_back(static_cast<int>(i));
      while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        const int jx = j % w, jy = j / w;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = jx + dx, ny = jy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const auto k = static_cast<std::size_t>(ny) * w + nx;
            if (mask[k] && id[k] < 0) {
              id[k] = count;
              stack.push_back(static_cast<int>(k));
            }
          }
      }
      ++count;
    }
  return id;
}

}  // namespace detail

/// Dominant-edge detection: median -> Gaussian -> Sobel -> non-maximum
/// suppression -> hysteresis with high = K and low = K / 2. Points carry
/// subpixel positions (parabolic fit across the edge) and unit normals along
/// the smoothed gradient.
inline EdgeDetection detect_edges(const RasterImage& input, const EdgeParams& params = {}) {
  RasterImage gray = input.channels == 3 ? extract_channel(input, params.channel) : input;
  if (params.downsample > 1) gray = downsample(gray, params.downsample);
  const RasterImage med = params.median_window > 1 ? median_filter(gray, params.median_window) : gray;
  const ScalarField smooth = gaussian_smooth(to_field(med), params.gaussian_sigma, params.gaussian_window);
  const Gradient g = sobel(smooth);
  EdgeDetection out;
  out.smoothed_magnitude = g.magnitude;
  try {
    out.diagnostics = dominant_edge_threshold(g.magnitude, params.stability, params.bin_rule);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateDistribution) return out;  // blank image
    if (e.code() != ErrorCode::NoStableRegion) throw;
    out.diagnostics.threshold = otsu_threshold(g.magnitude.values);
    out.diagnostics.stability = params.stability;
    out.diagnostics.otsu_fallback = true;
  }
  const double high = out.diagnostics.threshold;
  const double low = high / 2;
  if (!(high > 0)) return out;

  const int w = g.magnitude.width, h = g.magnitude.height;
  const auto& mag = g.magnitude;
  std::vector<char> nms(static_cast<std::size_t>(w) * h, 0);
  std::vector<Vec2> sub(nms.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = mag.at(x, y);
      if (m < low || m <= 0) continue;
      const Vec2 d = Vec2{g.gx.at(x, y), g.gy.at(x, y)} / m;
      const double fwd = mag.sample(x + d.x, y + d.y);
      const double bwd = mag.sample(x - d.x, y - d.y);
      // Ties resolve toward the forward pixel so a symmetric ridge keeps one side.
      if (!(m >= fwd && m > bwd)) continue;
      const double denom = bwd - 2 * m + fwd;
      double offset = denom < 0 ? 0.5 * (bwd - fwd) / denom : 0.0;
      offset = std::clamp(offset, -0.5, 0.5);
      nms[mag.index(x, y)] = 1;
      sub[mag.index(x, y)] = Vec2{x + offset * d.x, y + offset * d.y};
    }

  std::vector<char> keep(nms.size(), 0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = mag.index(x, y);
      if (!nms[i] || keep[i] || mag.values[i] < high) continue;
      keep[i] = 1;
      stack.push_back(static_cast<int>(i));
      while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        const int jx = j % w, jy = j / w;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = jx + dx, ny = jy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const auto k = mag.index(nx, ny);
            if (nms[k] && !keep[k]) {
              keep[k] = 1;
              stack.push_back(static_cast<int>(k));
            }
          }
      }
    }

  int ncomp = 0;
  const auto comp = detail::label_components(keep, w, h, ncomp);
  const double scale = params.downsample > 1 ? params.downsample : 1.0;
  // Map working-resolution pixel centers back onto the input grid.
  const double shift = params.downsample > 1 ? 0.5 * (scale - 1) : 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = mag.index(x, y);
      if (!keep[i]) continue;
      const Vec2 p = sub[i];
      out.edges.points.push_back({p.x * scale + shift, p.y * scale + shift});
      out.edges.normals.push_back(normalized({g.gx.values[i], g.gy.values[i]}));
      out.edges.contour_id.push_back(comp[i]);
    }
  return out;
}

/// Points on pixel borders where the label changes (4-connectivity). Normals
/// are MLS estimates over the points of the same label pair, pointing from
/// the lower toward the higher label.
inline EdgePointSet atlas_edges(const AnnotatedSliceImage& ai, double normal_radius = 6) {
  EdgePointSet out;
  auto pair_id = [](int a, int b) { return std::min(a, b) * 65536 + std::max(a, b); };
  for (int y = 0; y < ai.height; ++y)
    for (int x = 0; x < ai.width; ++x) {
      const int l = ai.at(x, y);
      if (x + 1 < ai.width && ai.at(x + 1, y) != l) {
        const int r = ai.at(x + 1, y);
        out.points.push_back({x + 0.5, static_cast<double>(y)});
        out.normals.push_back({r > l ? 1.0 : -1.0, 0.0});
        out.contour_id.push_back(pair_id(l, r));
      }
      if (y + 1 < ai.height && ai.at(x, y + 1) != l) {
        const int d = ai.at(x, y + 1);
        out.points.push_back({static_cast<double>(x), y + 0.5});
        out.normals.push_back({0.0, d > l ? 1.0 : -1.0});
        out.contour_id.push_back(pair_id(l, d));
      }
    }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < out.size(); ++i) groups[out.contour_id[i]].push_back(i);
  for (const auto& [id, idx] : groups) {
    std::vector<Vec2> pts, ref;
    for (auto i : idx) {
      pts.push_back(out.points[i]);
      ref.push_back(out.normals[i]);
    }
    const auto est = mls_normals(pts, normal_radius, ref);
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (est.valid[k]) out.normals[idx[k]] = est.normals[k];
  }
  return out;
}

namespace detail {

/// Boundary loops of a binary mask by marching squares over pixel centers,
/// vertices at the midpoints between inside and outside pixels. Diagonal
/// inside pixels are treated as connected.
inline std::vector<std::vector<Vec2>> mask_boundary_loops(const std::vector<char>& mask, int w, int h) {
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && mask[static_cast<std::size_t>(y) * w + x];
  };
  // Vertices are keyed on doubled coordinates, which are integers.
  auto key = [](Vec2 p) {
    return (static_cast<std::int64_t>(std::lround(2 * p.x)) + 4) * 1000003LL + (std::lround(2 * p.y) + 4);
  };
  std::map<std::int64_t, std::vector<Vec2>> adj;
  std::map<std::int64_t, Vec2> pos;
  auto add_seg = [&](Vec2 a, Vec2 b) {
    adj[key(a)].push_back(b);
    adj[key(b)].push_back(a);
    pos[key(a)] = a;
    pos[key(b)] = b;
  };
  for (int y = -1; y < h; ++y)
    for (int x = -1; x < w; ++x) {
      const bool tl = inside(x, y), tr = inside(x + 1, y), br = inside(x + 1, y + 1), bl = inside(x, y + 1);
      const Vec2 top{x + 0.5, static_cast<double>(y)}, right{x + 1.0, y + 0.5};
      const Vec2 bottom{x + 0.5, y + 1.0}, left{static_cast<double>(x), y + 0.5};
      std::vector<Vec2> cut;
      if (tl != tr) cut.push_back(top);
      if (tr != br) cut.push_back(right);
      if (br != bl) cut.push_back(bottom);
      if (bl != tl) cut.push_back(left);
      if (cut.size() == 2) {
        add_seg(cut[0], cut[1]);
      } else if (cut.size() == 4) {
        if (tl && br) {
          add_seg(top, right);
          add_seg(left, bottom);
        } else {
          add_seg(top, left);
          add_seg(right, bottom);
        }
      }
    }
  std::vector<std::vector<Vec2>> loops;
  std::map<std::int64_t, int> used;  // how many incident segments consumed
  for (const auto& [k0, nbrs] : adj) {
    if (used[k0] >= static_cast<int>(nbrs.size())) continue;
    std::vector<Vec2> loop{pos[k0]};
    std::int64_t prev = -1, cur = k0;
    for (;;) {
      const auto& nb = adj[cur];
      std::int64_t next = -1;
      for (auto q : nb) {
        const auto kq = key(q);
        if (kq != prev && used[kq] < static_cast<int>(adj[kq].size())) {
          next = kq;
          break;
        }
      }
      if (next < 0) break;
      ++used[cur];
      ++used[next];
      prev = cur;
      cur = next;
      if (cur == k0) break;
      loop.push_back(pos[cur]);
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace detail

/// The closed boundary of the largest region enclosed by the edge raster,
/// counter-clockwise (positive signed area). Each returned point carries the
/// outward normal of the boundary.
inline EdgePointSet outermost_contour(const EdgePointSet& edges, int width, int height, int close_iterations = 2) {
  if (edges.empty()) fail(ErrorCode::NoTissueFound, "empty edge set");
  const auto n = static_cast<std::size_t>(width) * height;
  std::vector<char> raster(n, 0);
  for (auto p : edges.points) {
    const int x = std::clamp(static_cast<int>(std::lround(p.x)), 0, width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(p.y)), 0, height - 1);
    raster[static_cast<std::size_t>(y) * width + x] = 1;
  }
  // Morphological closing with a 3x3 square; out-of-image counts as set for
  // the erosion so shapes touching the border are not eaten.
  auto morph = [&](std::vector<char>& img, bool dilate) {
    std::vector<char> out(n, 0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        bool any = false, all = true;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            const bool v = (nx < 0 || ny < 0 || nx >= width || ny >= height)
                               ? !dilate
                               : img[static_cast<std::size_t>(ny) * width + nx] != 0;
            any = any || v;
            all = all && v;
          }
        out[static_cast<std::size_t>(y) * width + x] = dilate ? any : all;
      }
    img.swap(out);
  };
  for (int i = 0; i < close_iterations; ++i) morph(raster, true);
  for (int i = 0; i < close_iterations; ++i) morph(raster, false);

  // Background reachable from the image border (4-connected).
  std::vector<char> outside(n, 0);
  std::deque<int> queue;
  auto seed = [&](int x, int y) {
    const auto i = static_cast<std::size_t>(y) * width + x;
    if (!raster[i] && !outside[i]) {
      outside[i] = 1;
      queue.push_back(static_cast<int>(i));
    }
  };
  for (int x = 0; x < width; ++x) {
    seed(x, 0);
    seed(x, height - 1);
  }
  for (int y = 0; y < height; ++y) {
    seed(0, y);
    seed(width - 1, y);
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const int x = i % width, y = i / width;
    const int nx[4] = {x + 1, x - 1, x, x};
    const int ny[4] = {y, y, y + 1, y - 1};
    for (int k = 0; k < 4; ++k)
      if (nx[k] >= 0 && ny[k] >= 0 && nx[k] < width && ny[k] < height) seed(nx[k], ny[k]);
  }
  std::vector<char> filled(n, 0);
  for (std::size_t i = 0; i < n; ++i) filled[i] = !outside[i];

  int ncomp = 0;
  const auto comp = detail::label_components(filled, width, height, ncomp);
  std::vector<std::size_t> area(ncomp, 0), enclosed(ncomp, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (comp[i] >= 0) {
      ++area[comp[i]];
      if (!raster[i]) ++enclosed[comp[i]];
    }
  int best = -1;
  for (int c = 0; c < ncomp; ++c)
    if (enclosed[c] > 0 && (best < 0 || area[c] > area[best])) best = c;
  if (best < 0) fail(ErrorCode::NoTissueFound, "edges do not enclose any region");

  std::vector<char> mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) mask[i] = comp[i] == best;
  auto loops = detail::mask_boundary_loops(mask, width, height);
  if (loops.empty()) fail(ErrorCode::NoTissueFound, "boundary tracing failed");
  auto outer = std::max_element(loops.begin(), loops.end(), [](const auto& a, const auto& b) {
    return std::abs(signed_area(a)) < std::abs(signed_area(b));
  });
  std::vector<Vec2> loop = std::move(*outer);
  if (signed_area(loop) < 0) std::reverse(loop.begin(), loop.end());

  EdgePointSet out;
  out.points = loop;
  const std::size_t m = loop.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 t = loop[(i + 1) % m] - loop[(i + m - 1) % m];
    out.normals.push_back(normalized(Vec2{t.y, -t.x}));  // right of travel = outward for CCW
    out.contour_id.push_back(0);
  }
  return out;
}

}  // namespace slicereg
