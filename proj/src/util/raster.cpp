#include "appforge/util/raster.hpp"

#include "appforge/util/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <unordered_map>

namespace appforge::util {

Raster Raster::filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Raster out;
  out.width = width;
  out.height = height;
  out.rgba.resize(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < out.rgba.size(); i += 4) {
    out.rgba[i] = r;
    out.rgba[i + 1] = g;
    out.rgba[i + 2] = b;
    out.rgba[i + 3] = 255;
  }
  return out;
}

void Raster::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 4;
  rgba[i] = r;
  rgba[i + 1] = g;
  rgba[i + 2] = b;
  rgba[i + 3] = 255;
}

Raster decode_png(std::span<const std::uint8_t> png) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size()))
    throw Error(std::string("png decode: ") + image.message);
  image.format = PNG_FORMAT_RGBA;
  Raster out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.rgba.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgba.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(std::string("png decode: ") + image.message);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Raster& raster) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = PNG_FORMAT_RGBA;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.rgba.data(), 0, nullptr))
    throw Error(std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.rgba.data(), 0, nullptr))
    throw Error(std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

double dominant_color_share(const Raster& raster) {
  const std::size_t pixels = static_cast<std::size_t>(raster.width) * raster.height;
  if (pixels == 0 || raster.rgba.size() < pixels * 4) return 0.0;
  std::unordered_map<std::uint32_t, std::size_t> buckets;
  std::size_t best = 0;
  for (std::size_t i = 0; i < pixels; ++i) {
    const std::uint8_t* p = &raster.rgba[i * 4];
    const std::uint32_t key = (static_cast<std::uint32_t>(p[0] >> 4) << 8) |
                              (static_cast<std::uint32_t>(p[1] >> 4) << 4) | (p[2] >> 4);
    best = std::max(best, ++buckets[key]);
  }
  return static_cast<double>(best) / static_cast<double>(pixels);
}

}  // namespace appforge::util
