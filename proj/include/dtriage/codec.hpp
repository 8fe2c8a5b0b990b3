#pragma once

// Browser-facing encodings of masks: 8-bit grayscale PNG and base64.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dtriage/mask.hpp"

namespace dtriage {

// Values are quantized like encode_pgm with maxval 255. No filtering, one
// IDAT chunk.
std::vector<std::uint8_t> encode_png(const CertaintyMask& mask);

// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace dtriage
