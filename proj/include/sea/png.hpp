#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sea {

// Minimal PNG encoder (8-bit RGB, zlib stream with stored deflate blocks).
// Enough for debug dumps; byte-deterministic.
std::vector<std::uint8_t> encode_png_rgb8(std::int32_t width, std::int32_t height,
                                          const std::vector<std::uint8_t>& rgb);

void write_png_rgb8(const std::string& path, std::int32_t width, std::int32_t height,
                    const std::vector<std::uint8_t>& rgb);

}  // namespace sea
