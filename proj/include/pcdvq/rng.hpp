#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

// Deterministic, counter-based randomness. Everything here is a pure function of
// (seed, index), so parallel fills give the same bytes as serial ones and no
// implementation-defined std distribution sneaks in.

namespace pcdvq {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t hash_at(std::uint64_t seed, std::uint64_t i) {
    return mix64(seed + (i + 1) * kGolden);
}

// 53-bit mantissa in [0, 1).
inline double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// +1 / -1 from bit 63; used for the Hadamard sign diagonal.
inline double sign_at(std::uint64_t seed, std::uint64_t i) {
    return (hash_at(seed, i) >> 63) ? -1.0 : 1.0;
}

struct GaussianPair {
    double z0, z1;
};

// Box-Muller on two hashed uniforms; u1 is kept in (0, 1] so log never sees 0.
inline GaussianPair gaussian_pair(std::uint64_t seed, std::uint64_t pair_index) {
    const double u1 =
        static_cast<double>((hash_at(seed, 2 * pair_index) >> 11) + 1) * 0x1.0p-53;
    const double u2 = to_unit(hash_at(seed, 2 * pair_index + 1));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(theta), radius * std::sin(theta)};
}

template <typename T>
void fill_gaussian(std::uint64_t seed, std::span<T> out) {
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const GaussianPair g = gaussian_pair(seed, i / 2);
        out[i] = static_cast<T>(g.z0);
        if (i + 1 < out.size()) out[i + 1] = static_cast<T>(g.z1);
    }
}

// Sequential stream for the few places that need stateful draws (k-means++,
// greedy seeding).
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += kGolden;
        return mix64(state);
    }

    double next_unit() { return to_unit(next()); }

    // Unbiased via rejection on the top multiple of n.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }
};

}  // namespace pcdvq
