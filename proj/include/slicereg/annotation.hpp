#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicereg/error.hpp"

namespace slicereg {

struct Vec3 {
  double x = 0, y = 0, z = 0;
  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};
constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }

struct RegionInfo {
  int id = 0;
  std::string name;
  std::array<std::uint8_t, 3> color{255, 255, 255};
  friend bool operator==(const RegionInfo&, const RegionInfo&) = default;
};

using RegionTable = std::map<int, RegionInfo>;

/// Plane parameters an annotated slice was cut from. Pixel (i, j) has its
/// center at origin + (i - (width-1)/2) * pitch * u + (j - (height-1)/2) * pitch * v.
struct SlicePlane {
  Vec3 origin;
  Vec3 normal{0, 0, 1};
  Vec3 u{1, 0, 0};
  Vec3 v{0, 1, 0};
  double pixel_pitch = 1.0;  // micrometers per pixel
  int width = 1;
  int height = 1;
  friend bool operator==(const SlicePlane&, const SlicePlane&) = default;
};

/// Region id per pixel; 0 is background.
struct AnnotatedSliceImage {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  RegionTable regions;
  std::optional<SlicePlane> provenance;

  AnnotatedSliceImage() = default;
  AnnotatedSliceImage(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidArgument, "label image dimensions must be positive");
    labels.assign(static_cast<std::size_t>(w) * h, 0);
  }
  int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  /// Every nonzero label must be present in the region table.
  bool consistent() const {
    for (int l : labels)
      if (l != 0 && !regions.count(l)) return false;
    return true;
  }

  friend bool operator==(const AnnotatedSliceImage&, const AnnotatedSliceImage&) = default;
};

}  // namespace slicereg
