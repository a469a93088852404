#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tcd {

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len,
                             std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (std::size_t k = 0; k < len; ++k) {
        hash ^= data[k];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& data) {
    return fnv1a64(data.data(), data.size());
}

// Shared binary container framing: 16-byte header (4-byte magic, u32 version,
// u64 metadata length, all little-endian), JSON metadata, raw payload, and a
// trailing u64 FNV-1a hash of everything before it.
struct Container {
    std::array<char, 4> magic{};
    std::uint32_t version = 1;
    nlohmann::json meta;
    std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> container_serialize(const Container& c);
Container container_deserialize(const std::vector<std::uint8_t>& bytes,
                                const char expected_magic[4]);

void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// Float32 little-endian packing for series / tensor payloads.
std::vector<std::uint8_t> pack_f32(const std::vector<float>& values);
std::vector<float> unpack_f32(const std::vector<std::uint8_t>& bytes);

}  // namespace tcd
