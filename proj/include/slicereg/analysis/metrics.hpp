#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "slicereg/error.hpp"
#include "slicereg/geom/vec2.hpp"

namespace slicereg {

struct LandmarkSet {
  std::vector<Vec2> a;  // e.g. microscope image
  std::vector<Vec2> b;  // e.g. atlas image
  std::size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

struct ErrorSummary {
  double rmse = 0;
  double mee = 0;  // median
  double mae = 0;  // maximum
};

/// Errors d_i = |T(a_i) - b_i|.
inline ErrorSummary landmark_errors(const LandmarkSet& lm, const std::function<Vec2(Vec2)>& transform) {
  if (lm.empty()) fail(ErrorCode::EmptyLandmarks, "no landmarks");
  if (lm.a.size() != lm.b.size()) fail(ErrorCode::InvalidArgument, "landmark lists differ in length");
  std::vector<double> d;
  d.reserve(lm.size());
  for (std::size_t i = 0; i < lm.size(); ++i) d.push_back(distance(transform(lm.a[i]), lm.b[i]));
  ErrorSummary s;
  double ss = 0;
  for (double v : d) ss += v * v;
  s.rmse = std::sqrt(ss / static_cast<double>(d.size()));
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  s.mee = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  s.mae = d.back();
  return s;
}

inline ErrorSummary landmark_errors(const LandmarkSet& lm) {
  return landmark_errors(lm, [](Vec2 p) { return p; });
}

/// CSV with header `xa,ya,xb,yb`.
inline void write_landmarks_csv(const std::string& path, const LandmarkSet& lm) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path + " for writing");
  out.precision(17);
  out << "xa,ya,xb,yb\n";
  for (std::size_t i = 0; i < lm.size(); ++i)
    out << lm.a[i].x << ',' << lm.a[i].y << ',' << lm.b[i].x << ',' << lm.b[i].y << '\n';
}

inline LandmarkSet read_landmarks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("xa,ya,xb,yb", 0) != 0) fail(ErrorCode::Io, "landmark CSV must start with header xa,ya,xb,yb");
  LandmarkSet lm;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double xa, ya, xb, yb;
    if (!(ss >> xa >> ya >> xb >> yb)) fail(ErrorCode::Io, "malformed landmark row: " + line);
    lm.a.push_back({xa, ya});
    lm.b.push_back({xb, yb});
  }
  return lm;
}

}  // namespace slicereg
