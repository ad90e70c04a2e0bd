#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sea/nn/model.hpp"

namespace sea::nn {

// "SEA1" container: magic, u16 format version, u32 tensor count, then per
// tensor a length-prefixed UTF-8 name, u8 rank + u32 dims, and a little-
// endian f32 payload; trailing CRC32 over everything before it. Round-trips
// bit-exactly.
inline constexpr char kCheckpointMagic[4] = {'S', 'E', 'A', '1'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensorF32 {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> data;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensorF32>& tensors);

// Decodes one checkpoint blob starting at data; *consumed receives the byte
// count so callers can read trailing blocks. Throws ValidationError on bad
// magic, version, or CRC.
std::vector<NamedTensorF32> decode_checkpoint(const std::uint8_t* data, std::size_t size,
                                               std::size_t* consumed = nullptr);

// EncoderState <-> named tensors (theta/, theta_hat/, vel/ prefixes plus a
// meta tensor carrying the model shape).
std::vector<NamedTensorF32> state_to_tensors(const EncoderState<float>& state);
EncoderState<float> state_from_tensors(const std::vector<NamedTensorF32>& tensors);

void save_state(const EncoderState<float>& state, const std::string& path);
EncoderState<float> load_state(const std::string& path);

}  // namespace sea::nn
