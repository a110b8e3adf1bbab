#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pcdvq {

// Row-major p x q weight matrix, f32 at rest.
struct WeightMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> values;

    float& at(std::uint32_t r, std::uint32_t c) { return values[std::size_t(r) * cols + c]; }
    float at(std::uint32_t r, std::uint32_t c) const { return values[std::size_t(r) * cols + c]; }
};

// Post rotated-Hadamard matrix. Stored column-major so the k-groups fed to the
// quantizer are contiguous. scales[j] is the f32-rounded ||W_col_j|| / sqrt(p);
// columns with scale 0 hold zeros and round-trip to zeros.
struct RegularizedMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint64_t sign_seed = 0;
    std::vector<float> values;
    std::vector<float> scales;

    std::span<const float> column(std::uint32_t c) const {
        return {values.data() + std::size_t(c) * rows, rows};
    }
};

// angles[0..k-3] in [0, pi], angles[k-2] in [0, 2pi).
struct PolarVector {
    std::vector<double> angles;
    double radius = 0.0;
};

// Columns are sign-flipped, Hadamard-rotated, and divided by their rounded scale,
// which makes the entries approximately N(0, 1) draws.
RegularizedMatrix regularize_matrix(const WeightMatrix& w, std::uint64_t sign_seed);
WeightMatrix deregularize_matrix(const RegularizedMatrix& r);

// k >= 2, v finite and nonzero. from_polar(to_polar(v)) == v up to fp error.
PolarVector to_polar(std::span<const double> v);
std::vector<double> from_polar(const PolarVector& p);

}  // namespace pcdvq
