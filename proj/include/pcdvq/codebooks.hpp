#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pcdvq {

// All codebook entries are canonically rounded to the f32 grid (files store f32;
// keeping the in-memory doubles on that grid makes a constructed codebook and its
// loaded copy bit-identical, so equal content hashes imply equal quantization).

struct DirectionCodebook {
    int dim = 0;
    int bits = 0;
    std::vector<double> entries;  // 2^bits x dim row-major unit vectors, selection order

    struct Provenance {
        std::uint64_t pool_size = 0;
        int shells_used = 0;
        std::uint64_t seed = 0;
    } provenance;

    std::size_t size() const { return dim ? entries.size() / dim : 0; }
    std::span<const double> entry(std::size_t i) const {
        return {entries.data() + i * dim, static_cast<std::size_t>(dim)};
    }
};

struct MagnitudeCodebook {
    int bits = 0;
    int k = 0;
    double tau = 0.0;
    std::vector<double> entries;     // 2^bits radii, strictly increasing
    std::vector<double> boundaries;  // 2^bits + 1; [0] = 0, [last] = max_r

    // construction diagnostics, not serialized
    bool converged = false;
    int iterations = 0;
    double final_movement = 0.0;
    std::vector<double> distortion_history;  // analytic MSE after each centroid step
};

struct CoupledCodebook {
    int dim = 0;
    int bits = 0;
    std::vector<double> entries;  // 2^bits x dim row-major

    std::size_t size() const { return dim ? entries.size() / dim : 0; }
    std::span<const double> entry(std::size_t i) const {
        return {entries.data() + i * dim, static_cast<std::size_t>(dim)};
    }
};

struct DirectionPool {
    std::vector<double> values;  // count x 8 row-major unit vectors
    int shells_used = 0;

    std::size_t count() const { return values.size() / 8; }
};

// E8 lattice points shell by shell (increasing norm, lexicographic inside a
// shell), normalized, collinear duplicates across shells removed. Stops at the
// first shell that brings the pool to at least min_count.
DirectionPool enumerate_e8_directions(std::size_t min_count);

// Canonical pool size when building a 2^bits codebook. Below ~16x the greedy
// max-min objective is still pool-starved: at bits=10 a 4x pool leaves the
// selection quality visibly seed-dependent, while 16x sits on the plateau
// (deeper pools measure the same MSE to three digits).
inline std::size_t direction_pool_target(int bits) { return std::size_t(16) << bits; }

// Max-min greedy selection: seeded initial pick, then repeatedly the candidate
// whose maximum cosine to the selected set is smallest (ties: lowest index).
// Entries come back in selection order.
DirectionCodebook greedy_direction_codebook(std::span<const double> pool, int dim,
                                            int bits, std::uint64_t seed);
DirectionCodebook greedy_direction_codebook(const DirectionPool& pool, int bits,
                                            std::uint64_t seed);

// Lloyd-Max on the chi(k) density truncated at chi_quantile(tau): alternate
// midpoint boundaries and cell conditional means until movement < tol or
// max_iters passes. Non-convergence returns the last iterate, converged=false.
MagnitudeCodebook lloyd_max_magnitude_codebook(int bits, int k, double tau,
                                               double tol = 1e-6, int max_iters = 200);

// Coupled baseline: k-means++ seeding then Lloyd. Empty cluster re-seeds to the
// point farthest from its assigned center.
CoupledCodebook kmeans_codebook(std::span<const double> vectors, int dim, int n_bits,
                                int iters, std::uint64_t seed);

using AnyCodebook = std::variant<DirectionCodebook, MagnitudeCodebook, CoupledCodebook>;

std::vector<std::uint8_t> serialize_codebook(const DirectionCodebook& cb);
std::vector<std::uint8_t> serialize_codebook(const MagnitudeCodebook& cb);
std::vector<std::uint8_t> serialize_codebook(const CoupledCodebook& cb);

void save_codebook(const std::string& path, const AnyCodebook& cb);
AnyCodebook load_codebook(const std::string& path);
AnyCodebook parse_codebook(std::span<const std::uint8_t> bytes);

// Convenience accessors that fail with format_error on a kind mismatch.
DirectionCodebook load_direction_codebook(const std::string& path);
MagnitudeCodebook load_magnitude_codebook(const std::string& path);
CoupledCodebook load_coupled_codebook(const std::string& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t codebook_hash(const DirectionCodebook& cb);
std::uint64_t codebook_hash(const MagnitudeCodebook& cb);

}  // namespace pcdvq
