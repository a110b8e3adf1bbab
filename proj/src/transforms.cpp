#include "pcdvq/transforms.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pcdvq/errors.hpp"
#include "pcdvq/fwht.hpp"
#include "pcdvq/parallel.hpp"

namespace pcdvq {

namespace {

void check_matrix(std::uint32_t rows, std::uint32_t cols, std::span<const float> values,
                  const char* who) {
    if (rows == 0 || cols == 0)
        throw validation_error(std::string(who) + ": empty matrix");
    if ((rows & (rows - 1)) != 0)
        throw validation_error(std::string(who) + ": row count must be a power of two");
    if (values.size() != std::size_t(rows) * cols)
        throw validation_error(std::string(who) + ": value count does not match shape");
    for (float v : values)
        if (!std::isfinite(v)) throw validation_error(std::string(who) + ": non-finite value");
}

}  // namespace

RegularizedMatrix regularize_matrix(const WeightMatrix& w, std::uint64_t sign_seed) {
    check_matrix(w.rows, w.cols, w.values, "regularize_matrix");
    const std::uint32_t p = w.rows, q = w.cols;

    RegularizedMatrix out;
    out.rows = p;
    out.cols = q;
    out.sign_seed = sign_seed;
    out.values.resize(std::size_t(p) * q);
    out.scales.resize(q);

    bool degenerate = false;
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> col(p);
#pragma omp for schedule(static) reduction(|| : degenerate)
        for (std::int64_t j = 0; j < std::int64_t(q); ++j) {
            double norm2 = 0.0;
            for (std::uint32_t i = 0; i < p; ++i) {
                const double v = w.values[std::size_t(i) * q + j];
                col[i] = v;
                norm2 += v * v;
            }
            const float scale = static_cast<float>(std::sqrt(norm2 / p));
            out.scales[j] = scale;
            if (scale == 0.0f) {
                degenerate = true;  // flag only; throwing inside omp is UB
                continue;
            }
            randomized_hadamard(col, sign_seed);
            const double inv = 1.0 / static_cast<double>(scale);
            float* dst = out.values.data() + std::size_t(j) * p;
            for (std::uint32_t i = 0; i < p; ++i)
                dst[i] = static_cast<float>(col[i] * inv);
        }
    }
    if (degenerate)
        throw validation_error("regularize_matrix: zero-norm column, scale undefined");
    return out;
}

WeightMatrix deregularize_matrix(const RegularizedMatrix& r) {
    if (r.scales.size() != r.cols)
        throw validation_error("deregularize_matrix: scale count does not match cols");
    check_matrix(r.rows, r.cols, r.values, "deregularize_matrix");
    const std::uint32_t p = r.rows, q = r.cols;

    WeightMatrix out;
    out.rows = p;
    out.cols = q;
    out.values.resize(std::size_t(p) * q);

#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> col(p);
#pragma omp for schedule(static)
        for (std::int64_t j = 0; j < std::int64_t(q); ++j) {
            const float* src = r.values.data() + std::size_t(j) * p;
            const double scale = r.scales[j];
            for (std::uint32_t i = 0; i < p; ++i) col[i] = scale * src[i];
            inverse_randomized_hadamard(col, r.sign_seed);
            for (std::uint32_t i = 0; i < p; ++i)
                out.values[std::size_t(i) * q + j] = static_cast<float>(col[i]);
        }
    }
    return out;
}

PolarVector to_polar(std::span<const double> v) {
    const std::size_t k = v.size();
    if (k < 2) throw validation_error("to_polar: need at least 2 components");
    for (double x : v)
        if (!std::isfinite(x)) throw validation_error("to_polar: non-finite component");

    // tail[i] = sqrt(v_i^2 + ... + v_{k-1}^2), accumulated back to front.
    std::vector<double> tail(k + 1, 0.0);
    for (std::size_t i = k; i-- > 0;) tail[i] = tail[i + 1] + v[i] * v[i];
    for (double& t : tail) t = std::sqrt(t);

    const double radius = tail[0];
    if (radius == 0.0) throw validation_error("to_polar: zero vector has no direction");

    PolarVector p;
    p.radius = radius;
    p.angles.resize(k - 1);
    for (std::size_t i = 0; i + 2 < k; ++i)
        p.angles[i] = std::atan2(tail[i + 1], v[i]);
    double last = std::atan2(v[k - 1], v[k - 2]);
    if (last < 0.0) last += 2.0 * std::numbers::pi;
    // atan2(-0, ...) can land exactly on 2pi after the wrap; fold it back.
    if (last >= 2.0 * std::numbers::pi) last = 0.0;
    p.angles[k - 2] = last;
    return p;
}

std::vector<double> from_polar(const PolarVector& p) {
    const std::size_t k = p.angles.size() + 1;
    if (k < 2) throw validation_error("from_polar: need at least 1 angle");
    if (!std::isfinite(p.radius) || p.radius < 0.0)
        throw validation_error("from_polar: radius must be finite and non-negative");
    for (std::size_t i = 0; i + 1 < p.angles.size(); ++i)
        if (!(p.angles[i] >= 0.0 && p.angles[i] <= std::numbers::pi))
            throw validation_error("from_polar: interior angle outside [0, pi]");
    const double last = p.angles.back();
    if (!(last >= 0.0 && last < 2.0 * std::numbers::pi))
        throw validation_error("from_polar: final angle outside [0, 2pi)");

    std::vector<double> v(k);
    double sines = p.radius;
    for (std::size_t i = 0; i + 2 < k; ++i) {
        v[i] = sines * std::cos(p.angles[i]);
        sines *= std::sin(p.angles[i]);
    }
    v[k - 2] = sines * std::cos(last);
    v[k - 1] = sines * std::sin(last);
    return v;
}

}  // namespace pcdvq
