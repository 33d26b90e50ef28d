#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cretok::png {

struct RgbImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB, 3 bytes per pixel
};

/// Lossless PNG bytes; identical input gives identical output.
std::vector<std::uint8_t> encode(const RgbImage& image);

/// Throws kUnreadableImage for anything that is not a decodable PNG.
RgbImage decode(std::span<const std::uint8_t> bytes);
RgbImage decode(std::string_view bytes);

RgbImage solid(std::uint32_t width, std::uint32_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace cretok::png
