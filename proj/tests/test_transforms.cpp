#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pcdvq/chi.hpp"
#include "pcdvq/errors.hpp"
#include "pcdvq/fwht.hpp"
#include "pcdvq/rng.hpp"
#include "pcdvq/transforms.hpp"
#include "test_util.hpp"

using namespace pcdvq;

namespace {

std::vector<double> gaussian_vec(std::uint64_t seed, std::size_t n) {
    std::vector<double> v(n);
    fill_gaussian(seed, std::span<double>(v));
    return v;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("fwht on unit impulse spreads uniformly") {
    std::vector<double> x{1.0, 0.0, 0.0, 0.0};
    fwht(x);
    for (double v : x) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("fwht of constant vector concentrates in first coefficient") {
    std::vector<double> x(8, 1.0);
    fwht(x);
    CHECK(x[0] == doctest::Approx(std::sqrt(8.0)).epsilon(1e-15));
    for (std::size_t i = 1; i < 8; ++i) CHECK(std::abs(x[i]) < 1e-14);
}

TEST_CASE("fwht matches the dense signed transform") {
    for (std::size_t n : {1u, 2u, 16u, 256u}) {
        std::vector<double> x = gaussian_vec(7 + n, n);
        const std::vector<double> ones(n, 1.0);
        auto want = oracle::dense_randomized_hadamard(x, ones);
        fwht(x);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x[i] == doctest::Approx(want[i]).epsilon(1e-11));
    }
}

TEST_CASE("fwht is self-inverse and norm-preserving") {
    for (std::size_t n : {4u, 64u, 4096u}) {
        std::vector<double> x = gaussian_vec(n, n);
        const std::vector<double> orig = x;
        const double n0 = norm(x);
        fwht(x);
        CHECK(norm(x) == doctest::Approx(n0).epsilon(1e-12));
        fwht(x);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x[i] == doctest::Approx(orig[i]).epsilon(1e-12));
    }
}

TEST_CASE("fwht rejects bad input") {
    std::vector<double> odd(3, 1.0);
    CHECK_THROWS_AS(fwht(odd), validation_error);
    std::vector<double> empty;
    CHECK_THROWS_AS(fwht(empty), validation_error);
    std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(fwht(inf), validation_error);
}

TEST_CASE("randomized_hadamard matches dense oracle and inverts") {
    const std::uint64_t seed = 99;
    for (std::size_t n : {8u, 128u}) {
        std::vector<double> signs(n);
        for (std::size_t i = 0; i < n; ++i) signs[i] = sign_at(seed, i);
        std::vector<double> x = gaussian_vec(n * 3, n);
        const std::vector<double> orig = x;
        auto want = oracle::dense_randomized_hadamard(x, signs);
        randomized_hadamard(x, seed);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x[i] == doctest::Approx(want[i]).epsilon(1e-11));
        inverse_randomized_hadamard(x, seed);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(x[i] == doctest::Approx(orig[i]).epsilon(1e-12));
    }
}

TEST_CASE("different sign seeds give different transforms") {
    std::vector<double> a = gaussian_vec(5, 64), b = a;
    randomized_hadamard(a, 1);
    randomized_hadamard(b, 2);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
    CHECK(diff > 1.0);
}

TEST_CASE("regularize then deregularize restores the matrix") {
    WeightMatrix w;
    w.rows = 256;
    w.cols = 17;
    w.values.resize(w.rows * w.cols);
    fill_gaussian(123, std::span<float>(w.values));
    for (auto& v : w.values) v *= 0.037f;  // typical weight magnitudes

    const auto reg = regularize_matrix(w, 42);
    REQUIRE(reg.scales.size() == w.cols);
    const auto back = deregularize_matrix(reg);
    REQUIRE(back.rows == w.rows);
    REQUIRE(back.cols == w.cols);
    for (std::size_t i = 0; i < w.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(w.values[i]).epsilon(2e-6));
}

TEST_CASE("regularized columns have unit rms") {
    WeightMatrix w;
    w.rows = 1024;
    w.cols = 8;
    w.values.resize(w.rows * w.cols);
    fill_gaussian(7, std::span<float>(w.values));
    const auto reg = regularize_matrix(w, 0);
    for (std::uint32_t j = 0; j < w.cols; ++j) {
        const auto col = reg.column(j);
        double s = 0.0;
        for (float v : col) s += double(v) * v;
        CHECK(std::sqrt(s / w.rows) == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("zero-norm column is rejected") {
    WeightMatrix w;
    w.rows = 16;
    w.cols = 2;
    w.values.assign(w.rows * w.cols, 0.0f);
    for (std::uint32_t i = 0; i < w.rows; ++i) w.at(i, 1) = float(i) - 7.5f;
    CHECK_THROWS_AS(regularize_matrix(w, 5), validation_error);
}

TEST_CASE("regularize validates shape") {
    WeightMatrix w;
    w.rows = 24;  // not a power of two
    w.cols = 4;
    w.values.assign(w.rows * w.cols, 1.0f);
    CHECK_THROWS_AS(regularize_matrix(w, 0), validation_error);

    w.rows = 0;
    w.values.clear();
    CHECK_THROWS_AS(regularize_matrix(w, 0), validation_error);
}

TEST_CASE("basis vector spreads to uniform magnitude") {
    std::vector<double> x(1024, 0.0);
    x[0] = 1.0;
    randomized_hadamard(x, 71);
    for (double v : x) CHECK(std::abs(v) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
}

TEST_CASE("regularized Gaussian matrix: coordinates N(0,1), group radii chi(8)") {
    WeightMatrix w;
    w.rows = 4096;
    w.cols = 256;
    w.values.resize(std::size_t(w.rows) * w.cols);
    fill_gaussian(2024, std::span<float>(w.values));

    const auto reg = regularize_matrix(w, 31337);

    double mean = 0.0, var = 0.0;
    for (float v : reg.values) mean += v;
    mean /= double(reg.values.size());
    for (float v : reg.values) var += (v - mean) * (v - mean);
    var /= double(reg.values.size());
    CHECK(std::abs(mean) < 0.01);
    CHECK(var > 0.99);
    CHECK(var < 1.01);

    std::vector<double> radii(reg.values.size() / 8);
    for (std::size_t g = 0; g < radii.size(); ++g) {
        double s = 0.0;
        for (int d = 0; d < 8; ++d) {
            const double v = reg.values[g * 8 + d];
            s += v * v;
        }
        radii[g] = std::sqrt(s);
    }
    const double d = oracle::ks_statistic(
        std::move(radii), [](double r) { return pcdvq::regularized_gamma_p(4.0, 0.5 * r * r); });
    CHECK(d < 0.01);
}

TEST_CASE("to_polar matches the k=2 reference point") {
    const std::vector<double> v{0.0, -1.0};
    const auto p = to_polar(v);
    CHECK(p.radius == doctest::Approx(1.0));
    REQUIRE(p.angles.size() == 1);
    CHECK(p.angles[0] == doctest::Approx(1.5 * std::numbers::pi));
}

TEST_CASE("polar round trip across dimensions") {
    for (int k : {2, 3, 8, 16}) {
        for (std::uint64_t s = 0; s < 50; ++s) {
            const auto v = gaussian_vec(s * 31 + k, k);
            const auto p = to_polar(v);
            REQUIRE(int(p.angles.size()) == k - 1);
            for (int i = 0; i + 1 < k - 1; ++i) {
                CHECK(p.angles[i] >= 0.0);
                CHECK(p.angles[i] <= std::numbers::pi);
            }
            CHECK(p.angles.back() >= 0.0);
            CHECK(p.angles.back() < 2.0 * std::numbers::pi);
            const auto back = from_polar(p);
            for (int i = 0; i < k; ++i)
                CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("polar handles axis-aligned and zero-tail vectors") {
    for (auto v : {std::vector<double>{1.0, 0.0, 0.0}, std::vector<double>{0.0, 0.0, -2.0},
                   std::vector<double>{3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}}) {
        const auto p = to_polar(v);
        const auto back = from_polar(p);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-12));
    }
}

TEST_CASE("polar rejects bad input") {
    CHECK_THROWS_AS(to_polar(std::vector<double>{1.0}), validation_error);
    CHECK_THROWS_AS(to_polar(std::vector<double>{0.0, 0.0, 0.0}), validation_error);
    CHECK_THROWS_AS(to_polar(std::vector<double>{1.0, std::nan("")}), validation_error);

    PolarVector bad;
    bad.radius = -1.0;
    bad.angles = {0.5};
    CHECK_THROWS_AS(from_polar(bad), validation_error);
    bad.radius = 1.0;
    bad.angles = {7.0};  // outside [0, 2pi)
    CHECK_THROWS_AS(from_polar(bad), validation_error);
    bad.angles = {4.0, 1.0};  // interior angle outside [0, pi]
    CHECK_THROWS_AS(from_polar(bad), validation_error);
}
