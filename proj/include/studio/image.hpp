#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "studio/io.hpp"

namespace studio {

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool operator==(const RgbImage&) const = default;
};

enum class Resample { nearest, bilinear };

// PNG codec. Encoding is deterministic: fixed compression level, no time chunk.
Bytes encode_png(const RgbImage& image);
RgbImage decode_png(std::span<const std::uint8_t> bytes);  // throws DecodeError

RgbImage resize(const RgbImage& src, int width, int height, Resample mode);

// Scales `src` to fit inside width x height with aspect preserved and centers it
// on a black canvas.
RgbImage letterbox(const RgbImage& src, int width, int height, Resample mode);

}  // namespace studio
