#pragma once

#include <cstdint>
#include <span>

#include "openleaf/digest.hpp"

namespace openleaf {

struct PngInfo {
  int width = 0;
  int height = 0;
};

// Fully decodes the image; throws BadResponse if it is not a valid PNG.
PngInfo decode_png_info(std::span<const std::uint8_t> bytes);

// RGB8 image filled with a vertical two-colour gradient.
Bytes encode_gradient_png(int width, int height, std::uint32_t top_rgb, std::uint32_t bottom_rgb);

}  // namespace openleaf
