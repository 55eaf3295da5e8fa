#include "openleaf/png_image.hpp"

#include <png.h>

#include <cstring>
#include <vector>

#include <fmt/format.h>

#include "openleaf/errors.hpp"

namespace openleaf {

PngInfo decode_png_info(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw BadResponse(fmt::format("image is not a valid PNG: {}", image.message));
  image.format = PNG_FORMAT_RGBA;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw BadResponse(fmt::format("PNG failed to decode: {}", image.message));
  }
  return {static_cast<int>(image.width), static_cast<int>(image.height)};
}

Bytes encode_gradient_png(int width, int height, std::uint32_t top_rgb, std::uint32_t bottom_rgb) {
  if (width <= 0 || height <= 0) throw PreconditionError("PNG dimensions must be positive");
  std::vector<png_byte> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  auto channel = [](std::uint32_t rgb, int shift) { return static_cast<int>((rgb >> shift) & 0xff); };
  for (int y = 0; y < height; ++y) {
    const int t = height > 1 ? (y * 255) / (height - 1) : 0;
    png_byte row[3];
    for (int c = 0; c < 3; ++c) {
      const int shift = 16 - 8 * c;
      row[c] = static_cast<png_byte>((channel(top_rgb, shift) * (255 - t) +
                                      channel(bottom_rgb, shift) * t) / 255);
    }
    for (int x = 0; x < width; ++x)
      std::memcpy(&pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                           static_cast<std::size_t>(x)) * 3],
                  row, 3);
  }

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw std::runtime_error(fmt::format("PNG encode failed: {}", image.message));
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw std::runtime_error(fmt::format("PNG encode failed: {}", image.message));
  out.resize(size);
  return out;
}

}  // namespace openleaf
