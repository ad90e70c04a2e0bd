#include "sea/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sea/crc32.hpp"
#include "sea/errors.hpp"

namespace sea::nn {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::uint8_t* p;
    std::size_t remaining;

    void need(std::size_t n) const {
        if (remaining < n) throw ValidationError("checkpoint: truncated file");
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        remaining -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        remaining -= 4;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        const std::uint8_t v = p[0];
        ++p;
        --remaining;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        remaining -= n;
        return s;
    }
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensorF32>& tensors) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
    put_u16(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > 0xFFFF) throw ValidationError("checkpoint: tensor name too long");
        put_u16(out, static_cast<std::uint16_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        out.push_back(static_cast<std::uint8_t>(t.shape.size()));
        std::size_t n = 1;
        for (const auto d : t.shape) {
            put_u32(out, d);
            n *= d;
        }
        if (n != t.data.size()) throw ValidationError("checkpoint: shape does not match data for " + t.name);
        for (const float v : t.data) put_f32(out, v);
    }
    put_u32(out, crc32(out.data(), out.size()));
    return out;
}

std::vector<NamedTensorF32> decode_checkpoint(const std::uint8_t* data, std::size_t size,
                                              std::size_t* consumed) {
    Reader r{data, size};
    const std::string magic = r.str(4);
    if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0)
        throw ValidationError("checkpoint: bad magic; not a SEA1 file");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw ValidationError("checkpoint: unsupported format version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    const std::uint32_t count = r.u32();
    std::vector<NamedTensorF32> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensorF32 t;
        const std::uint16_t name_len = r.u16();
        t.name = r.str(name_len);
        const std::uint8_t rank = r.u8();
        std::size_t n = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            t.shape.push_back(r.u32());
            n *= t.shape.back();
        }
        t.data.resize(n);
        for (std::size_t k = 0; k < n; ++k) t.data[k] = r.f32();
        tensors.push_back(std::move(t));
    }
    const std::size_t body_len = size - r.remaining;
    const std::uint32_t stored_crc = r.u32();
    const std::uint32_t actual_crc = crc32(data, body_len);
    if (stored_crc != actual_crc) throw ValidationError("checkpoint: CRC mismatch; file is corrupt");
    if (consumed) *consumed = body_len + 4;
    return tensors;
}

namespace {

NamedTensorF32 tensor_of(const std::string& name, const Tensor<float>& t) {
    NamedTensorF32 out;
    out.name = name;
    for (const auto d : t.shape) out.shape.push_back(static_cast<std::uint32_t>(d));
    out.data = t.data;
    return out;
}

}  // namespace

std::vector<NamedTensorF32> state_to_tensors(const EncoderState<float>& state) {
    std::vector<NamedTensorF32> out;
    const auto& c = state.cfg;
    out.push_back(NamedTensorF32{"meta/model_config",
                                 {11},
                                 {static_cast<float>(c.input_dim), static_cast<float>(c.enc_hidden1),
                                  static_cast<float>(c.enc_hidden2), static_cast<float>(c.feature_dim),
                                  static_cast<float>(c.jig_hidden), static_cast<float>(c.trav_hidden),
                                  static_cast<float>(c.ins_hidden), static_cast<float>(c.ins_proj_dim),
                                  c.jig_linear_bypass ? 1.0f : 0.0f, static_cast<float>(c.enc_hidden3),
                                  c.enc_linear_skip ? 1.0f : 0.0f}});
    for (const auto& p : state.theta.params) out.push_back(tensor_of("theta/" + p.name, p.value));
    for (const auto& p : state.theta_hat.params) out.push_back(tensor_of("theta_hat/" + p.name, p.value));
    for (const auto& p : state.theta.params) out.push_back(tensor_of("vel/" + p.name, p.velocity));
    return out;
}

EncoderState<float> state_from_tensors(const std::vector<NamedTensorF32>& tensors) {
    const NamedTensorF32* meta = nullptr;
    for (const auto& t : tensors)
        if (t.name == "meta/model_config") meta = &t;
    if (!meta || meta->data.size() != 11) throw ValidationError("checkpoint: missing model config");
    ModelConfig cfg;
    cfg.input_dim = static_cast<std::int32_t>(meta->data[0]);
    cfg.enc_hidden1 = static_cast<std::int32_t>(meta->data[1]);
    cfg.enc_hidden2 = static_cast<std::int32_t>(meta->data[2]);
    cfg.feature_dim = static_cast<std::int32_t>(meta->data[3]);
    cfg.jig_hidden = static_cast<std::int32_t>(meta->data[4]);
    cfg.trav_hidden = static_cast<std::int32_t>(meta->data[5]);
    cfg.ins_hidden = static_cast<std::int32_t>(meta->data[6]);
    cfg.ins_proj_dim = static_cast<std::int32_t>(meta->data[7]);
    cfg.jig_linear_bypass = meta->data[8] != 0.0f;
    cfg.enc_hidden3 = static_cast<std::int32_t>(meta->data[9]);
    cfg.enc_linear_skip = meta->data[10] != 0.0f;

    EncoderState<float> state = EncoderState<float>::init(cfg, 0);

    auto fill = [&tensors](const std::string& name, Tensor<float>& dst) {
        for (const auto& t : tensors) {
            if (t.name != name) continue;
            if (t.data.size() != dst.data.size())
                throw ValidationError("checkpoint: size mismatch for " + name);
            dst.data = t.data;
            return;
        }
        throw ValidationError("checkpoint: missing tensor " + name);
    };
    for (auto& p : state.theta.params) {
        fill("theta/" + p.name, p.value);
        fill("vel/" + p.name, p.velocity);
    }
    for (auto& p : state.theta_hat.params) fill("theta_hat/" + p.name, p.value);
    return state;
}

void save_state(const EncoderState<float>& state, const std::string& path) {
    const auto bytes = encode_checkpoint(state_to_tensors(state));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeFailure("write failed: " + path);
}

EncoderState<float> load_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return state_from_tensors(decode_checkpoint(bytes.data(), bytes.size()));
}

}  // namespace sea::nn
