#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace appforge::util {

// 8-bit RGBA, row-major.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  static Raster filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

// Throws appforge::Error on anything that is not a decodable PNG.
Raster decode_png(std::span<const std::uint8_t> png);
std::vector<std::uint8_t> encode_png(const Raster& raster);

// Share of pixels falling into the most common colour bucket, where each
// channel is quantized to 16 levels. 0 for an empty raster.
double dominant_color_share(const Raster& raster);

}  // namespace appforge::util
