#pragma once

#include <cstdint>
#include <span>

namespace pcdvq {

// In-place orthonormal Walsh-Hadamard transform: x <- (1/sqrt(n)) H_n x.
// n must be a power of two (n >= 1) and x finite. Self-inverse.
void fwht(std::span<double> x);

// x <- fwht(D x) with D = diag(+-1) drawn from sign_seed. Norm-preserving.
void randomized_hadamard(std::span<double> x, std::uint64_t sign_seed);

// Exact inverse: x <- D fwht(x).
void inverse_randomized_hadamard(std::span<double> x, std::uint64_t sign_seed);

}  // namespace pcdvq
