#ifndef SEMADV_CHECKPOINT_HPP
#define SEMADV_CHECKPOINT_HPP

// Binary parameter checkpoints. Layout:
//   magic "SADVCKPT" | u32 version | records...
//   record: u32 name_len | name bytes | u32 rank | u32 extents[rank] | f32 payload (little endian)
// Training metadata travels in a reserved "__meta__" record whose payload
// carries u32 bit patterns (seed, epochs, dataset fingerprint).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semadv/params.hpp"

namespace semadv {

struct CheckpointMeta {
    uint64_t seed = 0;
    uint32_t epochs = 0;
    uint64_t dataset_fingerprint = 0;
};

namespace detail_ckpt {

constexpr char kMagic[8] = {'S', 'A', 'D', 'V', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;
constexpr const char* kMetaName = "__meta__";

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool read_u32(std::istream& is, uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) | (static_cast<uint32_t>(b[2]) << 16) |
        (static_cast<uint32_t>(b[3]) << 24);
    return true;
}

inline void write_f32(std::ostream& os, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    write_u32(os, v);
}

inline bool read_f32(std::istream& is, float& f) {
    uint32_t v;
    if (!read_u32(is, v)) return false;
    std::memcpy(&f, &v, 4);
    return true;
}

inline float bits_as_f32(uint32_t v) {
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

inline uint32_t f32_as_bits(float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    return v;
}

inline void write_record(std::ostream& os, const std::string& name, const Shape& shape, const float* data,
                         size_t count) {
    write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_u32(os, static_cast<uint32_t>(d));
    for (size_t i = 0; i < count; ++i) write_f32(os, data[i]);
}

}  // namespace detail_ckpt

template <typename Model>
void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta = {}) {
    namespace ck = detail_ckpt;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    os.write(ck::kMagic, 8);
    ck::write_u32(os, ck::kVersion);

    const float meta_payload[5] = {
        ck::bits_as_f32(static_cast<uint32_t>(meta.seed)), ck::bits_as_f32(static_cast<uint32_t>(meta.seed >> 32)),
        ck::bits_as_f32(meta.epochs), ck::bits_as_f32(static_cast<uint32_t>(meta.dataset_fingerprint)),
        ck::bits_as_f32(static_cast<uint32_t>(meta.dataset_fingerprint >> 32))};
    ck::write_record(os, ck::kMetaName, {5}, meta_payload, 5);

    for (const auto& p : model.params().entries())
        ck::write_record(os, p.first, p.second.shape(), p.second.values().data(), p.second.values().size());
    if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

// Loads into an existing model instance; the model declares the architecture
// and every record must match it by name and shape.
template <typename Model>
CheckpointMeta load_checkpoint(Model& model, const std::string& path) {
    namespace ck = detail_ckpt;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");

    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, ck::kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
    uint32_t version;
    if (!ck::read_u32(is, version)) throw std::runtime_error("checkpoint: truncated header in '" + path + "'");
    if (version != ck::kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) + " in '" + path + "'");

    CheckpointMeta meta;
    std::vector<bool> seen(model.params().entries().size(), false);

    uint32_t name_len;
    while (ck::read_u32(is, name_len)) {
        if (name_len > 4096) throw std::runtime_error("checkpoint: corrupt record name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw std::runtime_error("checkpoint: truncated record name");
        uint32_t rank;
        if (!ck::read_u32(is, rank) || rank > 8) throw std::runtime_error("checkpoint: truncated or corrupt rank");
        Shape shape(rank);
        size_t count = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            uint32_t ext;
            if (!ck::read_u32(is, ext)) throw std::runtime_error("checkpoint: truncated extents");
            shape[d] = static_cast<int>(ext);
            count *= ext;
        }
        std::vector<float> payload(count);
        for (size_t i = 0; i < count; ++i)
            if (!ck::read_f32(is, payload[i])) throw std::runtime_error("checkpoint: truncated payload in record '" + name + "'");

        if (name == ck::kMetaName) {
            if (count != 5) throw std::runtime_error("checkpoint: corrupt metadata record");
            meta.seed = static_cast<uint64_t>(ck::f32_as_bits(payload[0])) |
                        (static_cast<uint64_t>(ck::f32_as_bits(payload[1])) << 32);
            meta.epochs = ck::f32_as_bits(payload[2]);
            meta.dataset_fingerprint = static_cast<uint64_t>(ck::f32_as_bits(payload[3])) |
                                       (static_cast<uint64_t>(ck::f32_as_bits(payload[4])) << 32);
            continue;
        }

        auto& entries = model.params().entries();
        bool found = false;
        for (size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != name) continue;
            if (entries[i].second.shape() != shape)
                throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file has " + shape_str(shape) +
                                         ", model declares " + shape_str(entries[i].second.shape()));
            entries[i].second.values() = std::move(payload);
            seen[i] = true;
            found = true;
            break;
        }
        if (!found)
            throw std::runtime_error("checkpoint: shape mismatch against declared architecture: unexpected parameter '" +
                                     name + "'");
    }

    for (size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw std::runtime_error("checkpoint: missing parameter '" + model.params().entries()[i].first + "' in '" +
                                     path + "'");
    return meta;
}

}  // namespace semadv

#endif  // SEMADV_CHECKPOINT_HPP
