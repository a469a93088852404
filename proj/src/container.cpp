#include "tcd/container.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tcd {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | p[k];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
    return v;
}

}  // namespace

std::vector<std::uint8_t> container_serialize(const Container& c) {
    const std::string meta = c.meta.dump();
    std::vector<std::uint8_t> out;
    out.reserve(16 + meta.size() + c.payload.size() + 8);
    for (char ch : c.magic) out.push_back(static_cast<std::uint8_t>(ch));
    put_u32(out, c.version);
    put_u64(out, meta.size());
    out.insert(out.end(), meta.begin(), meta.end());
    out.insert(out.end(), c.payload.begin(), c.payload.end());
    put_u64(out, fnv1a64(out));
    return out;
}

Container container_deserialize(const std::vector<std::uint8_t>& bytes,
                                const char expected_magic[4]) {
    if (bytes.size() < 24)
        throw std::runtime_error("container: truncated file (missing header)");
    Container c;
    std::memcpy(c.magic.data(), bytes.data(), 4);
    if (std::memcmp(c.magic.data(), expected_magic, 4) != 0)
        throw std::runtime_error("container: bad magic");
    c.version = get_u32(bytes.data() + 4);
    if (c.version != 1)
        throw std::runtime_error("container: unsupported version");
    const std::uint64_t meta_len = get_u64(bytes.data() + 8);
    if (16 + meta_len + 8 > bytes.size())
        throw std::runtime_error("container: truncated file (missing metadata)");
    const std::uint64_t stored_hash = get_u64(bytes.data() + bytes.size() - 8);
    const std::uint64_t computed = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored_hash != computed)
        throw std::runtime_error("container: content hash mismatch");
    const char* meta_begin = reinterpret_cast<const char*>(bytes.data() + 16);
    c.meta = nlohmann::json::parse(meta_begin, meta_begin + meta_len);
    c.payload.assign(bytes.begin() + 16 + meta_len, bytes.end() - 8);
    return c;
}

void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
    const std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw std::runtime_error("read failed: " + path.string());
    return bytes;
}

std::vector<std::uint8_t> pack_f32(const std::vector<float>& values) {
    std::vector<std::uint8_t> out(values.size() * 4);
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint32_t bits;
        std::memcpy(&bits, &values[k], 4);
        for (int b = 0; b < 4; ++b)
            out[k * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
    return out;
}

std::vector<float> unpack_f32(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() % 4 != 0)
        throw std::runtime_error("payload size not a multiple of 4");
    std::vector<float> values(bytes.size() / 4);
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint32_t bits = 0;
        for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[k * 4 + b];
        std::memcpy(&values[k], &bits, 4);
    }
    return values;
}

}  // namespace tcd
