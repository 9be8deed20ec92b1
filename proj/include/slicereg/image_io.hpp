#pragma once

// 8-bit PNG read/write through libpng. Grayscale and RGB are the carried
// formats; palette and alpha inputs are expanded/stripped on read.

#include <png.h>

#include <array>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "slicereg/raster.hpp"

namespace slicereg {

using Rgb = std::array<std::uint8_t, 3>;

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorCode::Io, "cannot open " + path);
  return f;
}

inline void write_png_rows(const std::string& path, int width, int height, int color_type,
                           const std::vector<std::uint8_t>& data, int row_bytes,
                           const std::vector<Rgb>* palette = nullptr) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::Io, "failed writing " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> plte;
  if (palette) {
    for (const auto& c : *palette) plte.push_back(png_color{c[0], c[1], c[2]});
    png_set_PLTE(png, info, plte.data(), static_cast<int>(plte.size()));
  }
  // No timestamps or text chunks: output bytes depend only on pixel data.
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * row_bytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

inline RasterImage read_png(const std::string& path) {
  auto file = detail::open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "failed reading " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "unsupported channel layout in " + path);
  }
  RasterImage img(width, height, channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = img.samples.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const std::string& path, const RasterImage& img) {
  detail::write_png_rows(path, img.width, img.height, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                         img.samples, img.width * img.channels);
}

/// Indexed-colour PNG: `indices` is a single-channel image of palette slots.
inline void write_indexed_png(const std::string& path, const RasterImage& indices, const std::vector<Rgb>& palette) {
  if (indices.channels != 1) fail(ErrorCode::InvalidArgument, "indexed PNG needs a single-channel index image");
  if (palette.empty() || palette.size() > 256) fail(ErrorCode::InvalidArgument, "palette must hold 1..256 entries");
  detail::write_png_rows(path, indices.width, indices.height, PNG_COLOR_TYPE_PALETTE, indices.samples, indices.width,
                         &palette);
}

/// Reads the raw palette indices of an indexed PNG (no expansion).
inline RasterImage read_indexed_png(const std::string& path) {
  auto file = detail::open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, "failed reading " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_PALETTE || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::Io, path + " is not an 8-bit indexed PNG");
  }
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  RasterImage img(width, height, 1);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = img.samples.data() + static_cast<std::size_t>(y) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace slicereg
