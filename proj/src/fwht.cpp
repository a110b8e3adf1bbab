#include "pcdvq/fwht.hpp"

#include <cmath>
#include <cstddef>

#include "pcdvq/errors.hpp"
#include "pcdvq/rng.hpp"

namespace pcdvq {

namespace {

void check_input(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw validation_error("fwht: length must be a power of two");
    for (double v : x)
        if (!std::isfinite(v)) throw validation_error("fwht: non-finite input");
}

}  // namespace

void fwht(std::span<double> x) {
    check_input(x);
    const std::size_t n = x.size();
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = x[j];
                const double b = x[j + h];
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& v : x) v *= scale;
}

void randomized_hadamard(std::span<double> x, std::uint64_t sign_seed) {
    check_input(x);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= sign_at(sign_seed, i);
    fwht(x);
}

void inverse_randomized_hadamard(std::span<double> x, std::uint64_t sign_seed) {
    fwht(x);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= sign_at(sign_seed, i);
}

}  // namespace pcdvq
