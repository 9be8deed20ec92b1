#pragma once

#include <set>
#include <string>

#include <png.h>

#include "slicereg/annotation.hpp"
#include "slicereg/image_io.hpp"
#include "slicereg/slicer/mesh.hpp"

namespace slicereg {

/// Writes labels as an indexed PNG whose palette slot equals the region id.
inline void write_annotation_png(const std::string& path, const AnnotatedSliceImage& ai) {
  int top = 0;
  for (int l : ai.labels) top = std::max(top, l);
  for (const auto& [id, r] : ai.regions) top = std::max(top, id);
  if (top > 255) fail(ErrorCode::InvalidArgument, "indexed PNG holds region ids up to 255");
  std::vector<Rgb> palette(static_cast<std::size_t>(top) + 1, Rgb{0, 0, 0});
  for (const auto& [id, r] : ai.regions) palette[id] = r.color;
  RasterImage idx(ai.width, ai.height, 1);
  for (std::size_t i = 0; i < ai.labels.size(); ++i) idx.samples[i] = static_cast<std::uint8_t>(ai.labels[i]);
  write_indexed_png(path, idx, palette);
}

/// Reads an annotation PNG. Indexed images use palette slots as region ids,
/// grayscale images use the gray value. `regions` names the ids; ids it does
/// not cover get generated entries.
inline AnnotatedSliceImage read_annotation_png(const std::string& path, const RegionTable& regions = {}) {
  RasterImage idx;
  {
    auto file = detail::open_file(path, "rb");
    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8)) fail(ErrorCode::Io, path + " is not a PNG");
    std::fseek(file.get(), 25, SEEK_SET);  // colour type byte of IHDR
    const int color = std::fgetc(file.get());
    if (color == PNG_COLOR_TYPE_PALETTE) {
      idx = read_indexed_png(path);
    } else {
      idx = read_png(path);
      if (idx.channels != 1) fail(ErrorCode::Io, path + ": annotation must be indexed or grayscale");
    }
  }
  AnnotatedSliceImage ai(idx.width, idx.height);
  ai.regions = regions;
  std::set<int> present;
  for (std::size_t i = 0; i < idx.samples.size(); ++i) {
    ai.labels[i] = idx.samples[i];
    if (idx.samples[i]) present.insert(idx.samples[i]);
  }
  for (int id : present)
    if (!ai.regions.count(id)) ai.regions[id] = {id, "region_" + std::to_string(id), {255, 255, 255}};
  return ai;
}

}  // namespace slicereg
