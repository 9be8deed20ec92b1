#pragma once

#include <cmath>

#include "slicereg/annotation.hpp"
#include "slicereg/reg/register.hpp"
#include "slicereg/reg/warp.hpp"

namespace slicereg {

/// Atlas labels pulled back onto a width x height microscope grid: pixel q
/// takes the label nearest to its forward-mapped atlas position, or 0 when
/// that falls outside the atlas.
inline AnnotatedSliceImage transfer_annotations(const AnnotatedSliceImage& ai, const Affine2& affine,
                                                const DisplacementField& field, int width, int height) {
  AnnotatedSliceImage out(width, height);
  out.regions = ai.regions;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Vec2 p = forward_map({double(x), double(y)}, affine, field);
      const long px = std::lround(p.x), py = std::lround(p.y);
      if (px >= 0 && py >= 0 && px < ai.width && py < ai.height) out.at(x, y) = ai.at(int(px), int(py));
    }
  return out;
}

inline AnnotatedSliceImage transfer_annotations(const AnnotatedSliceImage& ai, const RegistrationResult& r,
                                                int mi_width, int mi_height) {
  return transfer_annotations(ai, r.affine, r.field, mi_width, mi_height);
}

}  // namespace slicereg
