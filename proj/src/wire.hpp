#pragma once

// Little-endian byte (de)serialization shared by the PCDC/PCDQ writers, plus
// atomic file replacement. Values are assembled bytewise so the on-disk layout
// is fixed regardless of host endianness.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "pcdvq/errors.hpp"

namespace pcdvq::wire {

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw format_error("truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = data[pos] | std::uint16_t(data[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    bool done() const { return pos == data.size(); }
};

std::vector<std::uint8_t> read_file(const std::string& path);

// Writes to <path>.tmp then renames, so readers never see a partial file.
void atomic_write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace pcdvq::wire
