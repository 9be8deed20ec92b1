#pragma once

// Dirichlet problem for the discrete Laplace equation on a regular grid:
// pinned nodes keep their values, border nodes are zero, and every other
// node equals the mean of its four neighbours.

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/reg/field.hpp"

namespace slicereg {

struct DirichletPin {
  Vec2 position;  // full-resolution pixel coordinates
  Vec2 value;     // displacement pinned there
};

struct LaplaceStats {
  int iterations_x = 0;
  int iterations_y = 0;
  std::size_t pinned_nodes = 0;
  std::size_t free_nodes = 0;
};

struct LaplaceOptions {
  double tolerance = 1e-8;  // relative residual
  int max_iterations = 10000;
};

namespace detail {

/// Conjugate gradient on the free nodes of one component. `fixed` marks
/// Dirichlet nodes whose values are taken from `u`; the rest are solved in place.
inline int solve_harmonic(ScalarField& u, const std::vector<char>& fixed, const LaplaceOptions& opt) {
  const int w = u.width, h = u.height;
  std::vector<int> free_ids;
  std::vector<int> slot(u.values.size(), -1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = u.index(x, y);
      if (!fixed[i]) {
        slot[i] = static_cast<int>(free_ids.size());
        free_ids.push_back(static_cast<int>(i));
      }
    }
  const std::size_t n = free_ids.size();
  if (n == 0) return 0;

  // A = 4I - (free neighbours); b = sum of fixed neighbour values.
  auto neighbours = [&](int i, auto&& visit) {
    const int x = i % w, y = i / w;
    if (x > 0) visit(i - 1);
    if (x + 1 < w) visit(i + 1);
    if (y > 0) visit(i - w);
    if (y + 1 < h) visit(i + w);
  };
  std::vector<double> b(n, 0.0), xv(n), r(n), p(n), ap(n);
  for (std::size_t k = 0; k < n; ++k) {
    neighbours(free_ids[k], [&](int j) {
      if (fixed[j]) b[k] += u.values[j];
    });
    xv[k] = u.values[free_ids[k]];
  }
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) {
      double s = 4 * v[k];
      neighbours(free_ids[k], [&](int j) {
        if (slot[j] >= 0) s -= v[slot[j]];
      });
      out[k] = s;
    }
  };
  auto dotv = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * c[k];
    return s;
  };
  double bnorm = std::sqrt(dotv(b, b));
  int it = 0;
  if (bnorm == 0) {
    std::fill(xv.begin(), xv.end(), 0.0);
  } else {
    apply(xv, ap);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - ap[k];
    p = r;
    double rr = dotv(r, r);
    while (std::sqrt(rr) > opt.tolerance * bnorm) {
      if (it >= opt.max_iterations)
        fail(ErrorCode::SolverFailed, "conjugate gradient did not converge in " + std::to_string(it) + " iterations");
      apply(p, ap);
      const double alpha = rr / dotv(p, ap);
      for (std::size_t k = 0; k < n; ++k) {
        xv[k] += alpha * p[k];
        r[k] -= alpha * ap[k];
      }
      const double rr_new = dotv(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
      ++it;
    }
  }
  for (std::size_t k = 0; k < n; ++k) u.values[free_ids[k]] = xv[k];
  return it;
}

}  // namespace detail

/// Solves both displacement components on the coarse grid of a
/// width x height image. Pins falling on the same node are averaged; pins on
/// the border are overridden by the zero border.
inline DisplacementField solve_laplace_warp(int width, int height, int grid_factor, std::span<const DirichletPin> pins,
                                            const LaplaceOptions& opt = {}, LaplaceStats* stats = nullptr) {
  if (pins.empty()) fail(ErrorCode::InvalidArgument, "at least one Dirichlet pin is required");
  DisplacementField f(width, height, grid_factor);
  const int cw = f.coarse_width(), ch = f.coarse_height();
  std::vector<char> fixed(static_cast<std::size_t>(cw) * ch, 0);
  for (int x = 0; x < cw; ++x) fixed[x] = fixed[static_cast<std::size_t>(ch - 1) * cw + x] = 1;
  for (int y = 0; y < ch; ++y) fixed[static_cast<std::size_t>(y) * cw] = fixed[static_cast<std::size_t>(y) * cw + cw - 1] = 1;

  std::map<std::size_t, std::pair<Vec2, int>> acc;
  for (const auto& pin : pins) {
    const int x = static_cast<int>(std::lround(pin.position.x / grid_factor));
    const int y = static_cast<int>(std::lround(pin.position.y / grid_factor));
    if (x <= 0 || y <= 0 || x >= cw - 1 || y >= ch - 1) continue;
    auto& a = acc[static_cast<std::size_t>(y) * cw + x];
    a.first += pin.value;
    ++a.second;
  }
  for (const auto& [i, a] : acc) {
    fixed[i] = 1;
    f.phi_x.values[i] = a.first.x / a.second;
    f.phi_y.values[i] = a.first.y / a.second;
  }
  LaplaceStats st;
  st.pinned_nodes = acc.size();
  st.iterations_x = detail::solve_harmonic(f.phi_x, fixed, opt);
  st.iterations_y = detail::solve_harmonic(f.phi_y, fixed, opt);
  for (char c : fixed) st.free_nodes += c == 0;
  if (stats) *stats = st;
  return f;
}

}  // namespace slicereg
