#pragma once

#include <cstddef>
#include <cstdint>

namespace sea {

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320), same variant zlib
// and PNG use. Streamable: pass the previous result back in as `crc`.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t crc = 0);

// Adler-32 checksum for zlib streams.
std::uint32_t adler32(const void* data, std::size_t len, std::uint32_t adler = 1);

}  // namespace sea
