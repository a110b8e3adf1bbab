#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pcdvq/codebooks.hpp"
#include "pcdvq/errors.hpp"
#include "wire.hpp"

namespace pcdvq {

namespace wire {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw io_error("cannot open " + path);
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<std::uint8_t> bytes(size > 0 ? std::size_t(size) : 0);
    const std::size_t got = bytes.empty() ? 0 : std::fread(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    if (got != bytes.size()) throw io_error("short read on " + path);
    return bytes;
}

void atomic_write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    const std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw io_error("cannot create " + tmp);
    const std::size_t put = bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), f);
    const bool flushed = std::fflush(f) == 0;
    std::fclose(f);
    if (put != bytes.size() || !flushed) {
        std::remove(tmp.c_str());
        throw io_error("short write on " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw io_error("cannot replace " + path + ": " + ec.message());
    }
}

}  // namespace wire

namespace {

constexpr std::uint8_t kKindDirection = 0;
constexpr std::uint8_t kKindMagnitude = 1;
constexpr std::uint8_t kKindCoupled = 2;

void put_header(std::vector<std::uint8_t>& out, std::uint8_t kind, std::uint8_t k,
                std::uint8_t bits, double tau, std::uint32_t count) {
    out.insert(out.end(), {'P', 'C', 'D', 'C'});
    wire::put_u16(out, 1);
    wire::put_u8(out, kind);
    wire::put_u8(out, k);
    wire::put_u8(out, bits);
    wire::put_u8(out, 0);
    wire::put_f64(out, tau);
    wire::put_u32(out, count);
}

void check_entry_grid(std::span<const double> values, const char* kind) {
    for (double v : values)
        if (v != double(float(v)))
            throw validation_error(std::string("serialize_codebook: ") + kind +
                                   " entry off the f32 grid");
}

}  // namespace

std::vector<std::uint8_t> serialize_codebook(const DirectionCodebook& cb) {
    check_entry_grid(cb.entries, "direction");
    std::vector<std::uint8_t> out;
    put_header(out, kKindDirection, std::uint8_t(cb.dim), std::uint8_t(cb.bits), 0.0,
               std::uint32_t(cb.size()));
    for (double v : cb.entries) wire::put_f32(out, float(v));
    return out;
}

std::vector<std::uint8_t> serialize_codebook(const MagnitudeCodebook& cb) {
    check_entry_grid(cb.entries, "magnitude");
    check_entry_grid(cb.boundaries, "magnitude boundary");
    std::vector<std::uint8_t> out;
    put_header(out, kKindMagnitude, std::uint8_t(cb.k), std::uint8_t(cb.bits), cb.tau,
               std::uint32_t(cb.entries.size()));
    for (double v : cb.entries) wire::put_f32(out, float(v));
    for (double v : cb.boundaries) wire::put_f32(out, float(v));
    return out;
}

std::vector<std::uint8_t> serialize_codebook(const CoupledCodebook& cb) {
    check_entry_grid(cb.entries, "coupled");
    std::vector<std::uint8_t> out;
    put_header(out, kKindCoupled, std::uint8_t(cb.dim), std::uint8_t(cb.bits), 0.0,
               std::uint32_t(cb.size()));
    for (double v : cb.entries) wire::put_f32(out, float(v));
    return out;
}

AnyCodebook parse_codebook(std::span<const std::uint8_t> bytes) {
    wire::Reader r{bytes};
    r.need(4);
    if (!(r.data[0] == 'P' && r.data[1] == 'C' && r.data[2] == 'D' && r.data[3] == 'C'))
        throw format_error("codebook: bad magic");
    r.pos = 4;
    if (r.u16() != 1) throw format_error("codebook: unsupported version");
    const std::uint8_t kind = r.u8();
    const int k = r.u8();
    const int bits = r.u8();
    r.u8();  // reserved
    const double tau = r.f64();
    const std::uint32_t count = r.u32();

    if (k < 1) throw format_error("codebook: bad dimension");
    if (bits > 24 || count != (std::uint32_t(1) << bits))
        throw format_error("codebook: entry count does not match bits");

    auto read_grid = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) {
            x = double(r.f32());
            if (!std::isfinite(x)) throw format_error("codebook: non-finite entry");
        }
        return v;
    };

    switch (kind) {
        case kKindDirection: {
            DirectionCodebook cb;
            cb.dim = k;
            cb.bits = bits;
            cb.entries = read_grid(std::size_t(count) * k);
            if (!r.done()) throw format_error("codebook: trailing bytes");
            for (std::size_t i = 0; i < cb.size(); ++i) {
                double norm2 = 0.0;
                for (double v : cb.entry(i)) norm2 += v * v;
                if (std::abs(norm2 - 1.0) > 1e-6)
                    throw format_error("codebook: direction entry not unit norm");
            }
            return cb;
        }
        case kKindMagnitude: {
            MagnitudeCodebook cb;
            cb.k = k;
            cb.bits = bits;
            cb.tau = tau;
            cb.entries = read_grid(count);
            cb.boundaries = read_grid(std::size_t(count) + 1);
            if (!r.done()) throw format_error("codebook: trailing bytes");
            for (std::size_t i = 1; i < cb.entries.size(); ++i)
                if (!(cb.entries[i] > cb.entries[i - 1]))
                    throw format_error("codebook: radii not increasing");
            if (!(cb.entries[0] > 0.0) || cb.boundaries[0] != 0.0)
                throw format_error("codebook: bad magnitude layout");
            return cb;
        }
        case kKindCoupled: {
            CoupledCodebook cb;
            cb.dim = k;
            cb.bits = bits;
            cb.entries = read_grid(std::size_t(count) * k);
            if (!r.done()) throw format_error("codebook: trailing bytes");
            return cb;
        }
        default:
            throw format_error("codebook: unknown kind");
    }
}

void save_codebook(const std::string& path, const AnyCodebook& cb) {
    const auto bytes = std::visit([](const auto& c) { return serialize_codebook(c); }, cb);
    wire::atomic_write_file(path, bytes);
}

AnyCodebook load_codebook(const std::string& path) { return parse_codebook(wire::read_file(path)); }

DirectionCodebook load_direction_codebook(const std::string& path) {
    auto any = load_codebook(path);
    if (auto* d = std::get_if<DirectionCodebook>(&any)) return std::move(*d);
    throw format_error(path + ": not a direction codebook");
}

MagnitudeCodebook load_magnitude_codebook(const std::string& path) {
    auto any = load_codebook(path);
    if (auto* m = std::get_if<MagnitudeCodebook>(&any)) return std::move(*m);
    throw format_error(path + ": not a magnitude codebook");
}

CoupledCodebook load_coupled_codebook(const std::string& path) {
    auto any = load_codebook(path);
    if (auto* c = std::get_if<CoupledCodebook>(&any)) return std::move(*c);
    throw format_error(path + ": not a coupled codebook");
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t codebook_hash(const DirectionCodebook& cb) { return fnv1a64(serialize_codebook(cb)); }

std::uint64_t codebook_hash(const MagnitudeCodebook& cb) { return fnv1a64(serialize_codebook(cb)); }

}  // namespace pcdvq
