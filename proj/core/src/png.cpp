#include "cretok/png.hpp"

#include <png.h>

#include <string>

#include "cretok/error.hpp"

namespace cretok::png {

std::vector<std::uint8_t> encode(const RgbImage& image) {
  if (image.width == 0 || image.height == 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw Error(ErrorCode::kInvalidArgument, "png: pixel buffer does not match the image size");
  }
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = image.width;
  desc.height = image.height;
  desc.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(desc, size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png: ") + desc.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("png: ") + desc.message);
  }
  out.resize(size);
  return out;
}

RgbImage decode(std::span<const std::uint8_t> bytes) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kUnreadableImage, std::string("png: ") + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.width = desc.width;
  out.height = desc.height;
  out.pixels.resize(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string message = desc.message;
    png_image_free(&desc);
    throw Error(ErrorCode::kUnreadableImage, "png: " + message);
  }
  return out;
}

RgbImage decode(std::string_view bytes) {
  return decode(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

RgbImage solid(std::uint32_t width, std::uint32_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img{width, height, {}};
  img.pixels.reserve(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
    img.pixels.push_back(r);
    img.pixels.push_back(g);
    img.pixels.push_back(b);
  }
  return img;
}

}  // namespace cretok::png
