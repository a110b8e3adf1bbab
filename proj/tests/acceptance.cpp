// Acceptance gate: one line per criterion, tolerances pinned in code.
// Exit code is the number of failed criteria, so the ctest entry goes red
// if any quantitative target is missed rather than silently passing.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pcdvq/analysis.hpp"
#include "pcdvq/chi.hpp"
#include "pcdvq/codebooks.hpp"
#include "pcdvq/parallel.hpp"
#include "pcdvq/quantizer.hpp"
#include "pcdvq/rng.hpp"
#include "pcdvq/transforms.hpp"

namespace {

using namespace pcdvq;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string str(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

// out.size() values from consecutive counter pairs starting at pair_base.
void fill_gauss_at(std::uint64_t seed, std::uint64_t pair_base, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const GaussianPair g = gaussian_pair(seed, pair_base + i / 2);
        out[i] = g.z0;
        if (i + 1 < out.size()) out[i + 1] = g.z1;
    }
}

template <typename F>
double simpson(F f, double lo, double hi, int n) {  // n even
    const double h = (hi - lo) / n;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// ---------------------------------------------------------------- criterion 1
// Radius/angle error split sums to the squared distance, near machine exactly.
Outcome c1_error_split_identity() {
    const double kRelTol = 1e-9;
    const std::size_t n = 100000;
    const int ks[3] = {2, 8, 64};
    double worst = 0.0;
    for (int k : ks) {
        std::vector<double> v(k), vh(k);
        const std::uint64_t sv = 111 + std::uint64_t(k), sh = 7111 + std::uint64_t(k);
        for (std::size_t i = 0; i < n; ++i) {
            fill_gauss_at(sv, i * std::size_t(k), v);
            fill_gauss_at(sh, i * std::size_t(k), vh);
            const double scale_v = std::pow(10.0, -3.0 + 6.0 * to_unit(hash_at(77, i)));
            const double scale_h = std::pow(10.0, -3.0 + 6.0 * to_unit(hash_at(78, i)));
            for (double& x : v) x *= scale_v;
            if (i % 7 == 3) {
                for (int d = 0; d < k; ++d) vh[d] = v[d] * (1.0 + 1e-7);  // radial-only gap
            } else if (i % 11 == 5) {
                for (int d = 0; d < k; ++d) vh[d] = v[d];  // zero distance
            } else {
                for (double& x : vh) x *= scale_h;
            }
            double r2 = 0.0, rh2 = 0.0;
            for (int d = 0; d < k; ++d) {
                r2 += v[d] * v[d];
                rh2 += vh[d] * vh[d];
            }
            const ErrorBreakdown e = mse_decompose(v, vh);
            const double gap = std::fabs(e.direction_mse + e.magnitude_mse - e.total_mse);
            worst = std::max(worst, gap / std::max({e.total_mse, r2, rh2}));
        }
    }
    return {worst <= kRelTol,
            str("max relative identity gap %.3g (tol %.0e); 1e5 pairs at k=2,8,64, norms 1e-3..1e3",
                worst, kRelTol)};
}

// ---------------------------------------------------------------- criterion 2
Outcome c2_polar_round_trip() {
    const double kRelTol = 1e-5;
    const std::size_t n = 10000;
    const double two_pi = 2.0 * std::acos(-1.0);
    std::vector<double> v(8);
    double worst = 0.0;
    std::size_t bad_range = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fill_gauss_at(222, i * 4, v);
        const PolarVector p = to_polar(v);
        if (p.angles.size() != 7 || !(p.radius > 0.0)) ++bad_range;
        for (std::size_t j = 0; j + 1 < p.angles.size(); ++j)
            if (!(p.angles[j] >= 0.0 && p.angles[j] <= std::acos(-1.0))) ++bad_range;
        if (!(p.angles.back() >= 0.0 && p.angles.back() < two_pi)) ++bad_range;
        const std::vector<double> back = from_polar(p);
        double d2 = 0.0, r2 = 0.0;
        for (int d = 0; d < 8; ++d) {
            d2 += (back[d] - v[d]) * (back[d] - v[d]);
            r2 += v[d] * v[d];
        }
        worst = std::max(worst, std::sqrt(d2 / r2));
    }
    return {worst < kRelTol && bad_range == 0,
            str("max relative error %.3g (tol %.0e), %zu angle-range violations on 1e4 vectors",
                worst, kRelTol, bad_range)};
}

// ---------------------------------------------------------------- criterion 3
// Group radii of a regularized Gaussian matrix follow chi(8).
Outcome c3_radii_vs_chi8() {
    const double kKsTol = 0.01;
    const std::uint32_t rows = 4096, cols = 1024;
    WeightMatrix w{rows, cols, std::vector<float>(std::size_t(rows) * cols)};
    fill_gaussian(303, std::span<float>(w.values));
    const RegularizedMatrix rm = regularize_matrix(w, 404);

    std::vector<double> radii;
    radii.reserve(std::size_t(rows) * cols / 8);
    for (std::uint32_t c = 0; c < cols; ++c) {
        const auto col = rm.column(c);
        for (std::uint32_t g = 0; g + 8 <= rows; g += 8) {
            double r2 = 0.0;
            for (int d = 0; d < 8; ++d) r2 += double(col[g + d]) * col[g + d];
            radii.push_back(std::sqrt(r2));
        }
    }
    std::sort(radii.begin(), radii.end());
    const ChiDistribution chi(8);
    const double n = double(radii.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double f = chi.cdf(radii[i]);
        ks = std::max({ks, std::fabs(f - double(i) / n), std::fabs(f - double(i + 1) / n)});
    }
    return {radii.size() >= 500000 && ks < kKsTol,
            str("KS statistic %.5f on %zu radii (tol < %.2f)", ks, radii.size(), kKsTol)};
}

// ---------------------------------------------------------------- criterion 4
Outcome c4_chi_machinery() {
    const double kNormTol = 1e-8, kInvTol = 1e-10, kMeanTol = 1e-9;
    const int ks[5] = {1, 2, 4, 8, 16};
    double worst_norm = 0.0, worst_inv = 0.0, worst_mean = 0.0, worst_quad = 0.0;
    for (int k : ks) {
        const ChiDistribution chi(k);
        const double hi = std::sqrt(double(k)) + 16.0;
        worst_norm = std::max(
            worst_norm, std::fabs(simpson([&](double t) { return chi.pdf(t); }, 0.0, hi, 200000) - 1.0));

        const double ps[] = {0.0,  1e-9, 1e-6, 1e-3, 0.1,  0.2,    0.3,    0.4,      0.5,
                             0.6,  0.7,  0.8,  0.9,  0.99, 0.999,  1 - 1e-6, 1 - 1e-9};
        for (double p : ps)
            worst_inv = std::max(worst_inv, std::fabs(chi.cdf(chi.quantile(p)) - p));

        const double closed =
            std::sqrt(2.0) * std::exp(std::lgamma((k + 1) / 2.0) - std::lgamma(k / 2.0));
        const double pe = chi.partial_expectation(0.0, std::numeric_limits<double>::infinity());
        worst_mean = std::max(worst_mean, std::fabs(pe - closed) / closed);
        const double quad = simpson([&](double t) { return t * chi.pdf(t); }, 0.0, hi, 200000);
        worst_quad = std::max(worst_quad, std::fabs(quad - closed) / closed);
    }
    const bool pass = worst_norm <= kNormTol && worst_inv <= kInvTol && worst_mean <= kMeanTol &&
                      worst_quad <= kMeanTol;
    return {pass, str("pdf mass gap %.2g (tol %.0e); inversion gap %.2g (tol %.0e); mean vs "
                      "closed form %.2g, vs quadrature %.2g (tol %.0e); k=1,2,4,8,16",
                      worst_norm, kNormTol, worst_inv, kInvTol, worst_mean, worst_quad, kMeanTol)};
}

// ---------------------------------------------------------------- criterion 5
// The analytic 2-bit radius codebook is a true Lloyd fixed point and at most
// 2% above the best of ten k-means runs fitted directly to 1e6 sampled radii.
Outcome c5_lloyd_optimality() {
    const double kFixTol = 1e-6, kRatioTol = 1.02, kHistSlack = 1e-12;
    const MagnitudeCodebook cb = lloyd_max_magnitude_codebook(2, 8, 0.9999);
    const ChiDistribution chi(8);

    double worst_fix = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double lo = cb.boundaries[i], hi = cb.boundaries[i + 1];
        const double mass = chi.cdf(hi) - chi.cdf(lo);
        const double centroid = chi.partial_expectation(lo, hi) / mass;
        worst_fix = std::max(worst_fix, std::fabs(cb.entries[i] - centroid));
    }
    for (int i = 1; i < 4; ++i)
        worst_fix = std::max(
            worst_fix, std::fabs(cb.boundaries[i] - 0.5 * (cb.entries[i - 1] + cb.entries[i])));

    bool monotone = true;
    for (std::size_t i = 0; i + 1 < cb.distortion_history.size(); ++i)
        monotone = monotone && cb.distortion_history[i + 1] <= cb.distortion_history[i] + kHistSlack;

    // 1e6 radii as norms of Gaussian 8-vectors; no inverse-cdf shortcut.
    const std::size_t n = 1000000;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r2 = 0.0;
        for (int p = 0; p < 4; ++p) {
            const GaussianPair g = gaussian_pair(505, i * 4 + p);
            r2 += g.z0 * g.z0 + g.z1 * g.z1;
        }
        r[i] = std::sqrt(r2);
    }
    auto sample_distortion = [&](const double* c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = (r[i] - c[0]) * (r[i] - c[0]);
            for (int j = 1; j < 4; ++j)
                best = std::min(best, (r[i] - c[j]) * (r[i] - c[j]));
            acc += best;
        }
        return acc / double(n);
    };
    const double lloyd_dist = sample_distortion(cb.entries.data());

    double best_kmeans = std::numeric_limits<double>::infinity();
    for (int s = 1; s <= 10; ++s) {
        SplitMix64 rng(505050 + std::uint64_t(s));
        double c[4];
        for (double& x : c) x = r[rng.next_below(n)];
        std::sort(c, c + 4);
        for (int it = 0; it < 100; ++it) {
            const double b1 = 0.5 * (c[0] + c[1]), b2 = 0.5 * (c[1] + c[2]),
                         b3 = 0.5 * (c[2] + c[3]);
            double sum[4] = {0, 0, 0, 0};
            std::size_t cnt[4] = {0, 0, 0, 0};
            for (std::size_t i = 0; i < n; ++i) {
                const int cell = r[i] < b2 ? (r[i] < b1 ? 0 : 1) : (r[i] < b3 ? 2 : 3);
                sum[cell] += r[i];
                ++cnt[cell];
            }
            double movement = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double next = cnt[j] ? sum[j] / double(cnt[j]) : c[j];
                movement = std::max(movement, std::fabs(next - c[j]));
                c[j] = next;
            }
            if (movement < 1e-12) break;
        }
        best_kmeans = std::min(best_kmeans, sample_distortion(c));
    }
    const double ratio = lloyd_dist / best_kmeans;
    const bool pass = cb.converged && worst_fix <= kFixTol && monotone && ratio <= kRatioTol;
    return {pass, str("fixed-point gap %.2g (tol %.0e); distortion history %s over %d iters; "
                      "sampled distortion ratio %.4f (tol <= %.2f)",
                      worst_fix, kFixTol, monotone ? "non-increasing" : "NOT monotone",
                      cb.iterations, ratio, kRatioTol)};
}

// ---------------------------------------------------------------- criterion 6
Outcome c6_e8_shell_and_dedup() {
    const double kDupTol = 1.0 - 1e-9;
    const DirectionPool first = enumerate_e8_directions(1);

    // Brute-force first shell: integer or all-half-integer points with even
    // coordinate sum and squared norm 2, normalized.
    std::vector<std::array<double, 8>> brute;
    for (int code = 0; code < 6561; ++code) {
        int c = code, sum = 0, norm2 = 0;
        std::array<double, 8> x{};
        for (int d = 0; d < 8; ++d) {
            const int v = c % 3 - 1;
            c /= 3;
            x[d] = v;
            sum += v;
            norm2 += v * v;
        }
        if (norm2 == 2 && sum % 2 == 0) brute.push_back(x);
    }
    for (int mask = 0; mask < 256; ++mask) {
        if (__builtin_popcount(mask) % 2 != 0) continue;  // even minus count <=> even sum
        std::array<double, 8> x{};
        for (int d = 0; d < 8; ++d) x[d] = (mask >> d & 1) ? -0.5 : 0.5;
        brute.push_back(x);
    }
    const double inv = 1.0 / std::sqrt(2.0);
    std::size_t matched = 0;
    for (const auto& x : brute) {
        for (std::size_t j = 0; j < first.count(); ++j) {
            double dot = 0.0;
            for (int d = 0; d < 8; ++d) dot += x[d] * inv * first.values[j * 8 + d];
            if (dot >= 1.0 - 1e-12) {
                ++matched;
                break;
            }
        }
    }

    const DirectionPool pool = enumerate_e8_directions(4096);
    const std::size_t m = pool.count();
    double max_cos = -1.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            double dot = 0.0;
            for (int d = 0; d < 8; ++d) dot += pool.values[i * 8 + d] * pool.values[j * 8 + d];
            max_cos = std::max(max_cos, dot);
        }

    const bool pass = first.count() == 240 && first.shells_used == 1 && brute.size() == 240 &&
                      matched == 240 && max_cos <= kDupTol;
    return {pass, str("first shell %zu directions, %zu/240 match brute force; pool of %zu has max "
                      "pair cosine %.9f (tol <= 1-1e-9)",
                      first.count(), matched, m, max_cos)};
}

// ---------------------------------------------------------------- criterion 7
// Unit-sphere MSE under nearest-codeword assignment; lower is better.
double direction_mse(const std::vector<double>& units, std::size_t n,
                     const std::vector<double>& entries) {
    const std::size_t m = entries.size() / 8;
    std::vector<float> ct(8 * m);
    std::vector<double> half2(m);
    for (std::size_t j = 0; j < m; ++j) {
        double e2 = 0.0;
        for (int d = 0; d < 8; ++d) {
            ct[std::size_t(d) * m + j] = float(entries[j * 8 + d]);
            e2 += entries[j * 8 + d] * entries[j * 8 + d];
        }
        half2[j] = 0.5 * e2;
    }
    // f32 staging of entries must be exact or the argmin is not the true one.
    for (std::size_t j = 0; j < m; ++j)
        for (int d = 0; d < 8; ++d)
            if (double(ct[std::size_t(d) * m + j]) != entries[j * 8 + d])
                throw std::runtime_error("direction_mse: entries not on the f32 grid");
    std::vector<double> acc(m);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* u = units.data() + i * 8;
        for (std::size_t j = 0; j < m; ++j) acc[j] = -half2[j];
        for (int d = 0; d < 8; ++d) {
            const float* row = ct.data() + std::size_t(d) * m;
            const double ud = u[d];
            for (std::size_t j = 0; j < m; ++j) acc[j] += double(row[j]) * ud;
        }
        double best = acc[0];
        for (std::size_t j = 1; j < m; ++j) best = acc[j] > best ? acc[j] : best;
        total += 1.0 - 2.0 * best;  // |u - e|^2 = 1 + |e|^2 - 2 u.e = 1 - 2 score
    }
    return total / double(n);
}

Outcome c7_greedy_beats_baselines() {
    const std::size_t n = 100000;
    const DirectionPool pool = enumerate_e8_directions(direction_pool_target(10));
    std::string parts;
    bool pass = true;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        std::vector<double> units(n * 8);
        std::vector<double> v(8);
        for (std::size_t i = 0; i < n; ++i) {
            fill_gauss_at(700 + s, i * 4, v);
            double r2 = 0.0;
            for (double x : v) r2 += x * x;
            const double inv = 1.0 / std::sqrt(r2);
            for (int d = 0; d < 8; ++d) units[i * 8 + d] = v[d] * inv;
        }

        const DirectionCodebook greedy = greedy_direction_codebook(pool, 10, s);

        std::vector<double> rand_entries(1024 * 8);
        std::vector<double> g(8);
        for (std::size_t j = 0; j < 1024; ++j) {
            fill_gauss_at(800 + s, j * 4, g);
            double r2 = 0.0;
            for (double x : g) r2 += x * x;
            const double inv = 1.0 / std::sqrt(r2);
            for (int d = 0; d < 8; ++d)
                rand_entries[j * 8 + d] = double(float(g[d] * inv));  // f32 grid, exact staging
        }

        const CoupledCodebook km = kmeans_codebook(units, 8, 10, 25, 900 + s);
        std::vector<double> km_entries(km.entries);
        for (std::size_t j = 0; j < km.size(); ++j) {
            double r2 = 0.0;
            for (int d = 0; d < 8; ++d) r2 += km_entries[j * 8 + d] * km_entries[j * 8 + d];
            const double inv = r2 > 0.0 ? 1.0 / std::sqrt(r2) : 0.0;
            for (int d = 0; d < 8; ++d)
                km_entries[j * 8 + d] = double(float(km_entries[j * 8 + d] * inv));
        }

        const double mg = direction_mse(units, n, greedy.entries);
        const double mr = direction_mse(units, n, rand_entries);
        const double mk = direction_mse(units, n, km_entries);
        pass = pass && mg < mr && mg < mk;
        parts += str("%sseed %llu: greedy %.5f vs random %.5f, k-means %.5f", s == 1 ? "" : "; ",
                     (unsigned long long)s, mg, mr, mk);
    }
    return {pass, parts};
}

// ---------------------------------------------------------------- criterion 8
Outcome c8_oracle_equivalence() {
    const DirectionCodebook cd =
        greedy_direction_codebook(enumerate_e8_directions(direction_pool_target(10)), 10, 42);
    const MagnitudeCodebook cr = lloyd_max_magnitude_codebook(2, 8, 0.9999);
    const std::size_t n = 100000;
    std::vector<double> v(8);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fill_gauss_at(1001, i * 4, v);
        const VectorCode got = quantize_vector(v, cd, cr);

        std::uint32_t dir = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cd.size(); ++j) {
            double dot = 0.0;
            for (int d = 0; d < 8; ++d) dot += cd.entries[j * 8 + d] * v[d];
            if (dot > best) {
                best = dot;
                dir = std::uint32_t(j);
            }
        }
        double r = 0.0;
        for (double x : v) r += x * x;
        r = std::sqrt(r);
        std::uint32_t mag = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cr.entries.size(); ++j) {
            const double d = std::fabs(r - cr.entries[j]);
            if (d < bd) {
                bd = d;
                mag = std::uint32_t(j);
            }
        }
        if (got.dir != dir || got.mag != mag || got.degenerate) ++mismatches;
    }

    std::size_t unstable = 0;
    for (std::uint32_t dir = 0; dir < 1024; ++dir)
        for (std::uint32_t mag = 0; mag < 4; ++mag) {
            const std::vector<double> w = dequantize_vector(dir, mag, cd, cr);
            const VectorCode back = quantize_vector(w, cd, cr);
            if (back.dir != dir || back.mag != mag || back.degenerate) ++unstable;
        }
    return {mismatches == 0 && unstable == 0,
            str("%zu/100000 index mismatches vs exhaustive search; %zu/4096 non-idempotent codes",
                mismatches, unstable)};
}

// ---------------------------------------------------------------- criterion 9
// Coupled k-means VQ error anatomy across group dimensions.
Outcome c9_coupled_error_anatomy() {
    const int dims[3] = {4, 8, 16};
    const SensitivityReport rep =
        sensitivity_dimension_experiment(100000, std::span<const int>(dims), 10, 7);
    bool dir_dominates = true;
    for (std::size_t i = 0; i < rep.axis.size(); ++i)
        dir_dominates = dir_dominates && rep.direction_error[i] > rep.magnitude_error[i];
    const double mag16 = rep.magnitude_error[2], dir4 = rep.direction_error[0];
    const bool crossing = mag16 < dir4;
    return {dir_dominates && crossing,
            str("direction > magnitude at k=4,8,16: %s (dir %.4f/%.4f/%.4f vs mag %.4f/%.4f/%.4f); "
                "magnitude(k=16)=%.4f < direction(k=4)=%.4f: %s",
                dir_dominates ? "yes" : "NO", rep.direction_error[0], rep.direction_error[1],
                rep.direction_error[2], rep.magnitude_error[0], rep.magnitude_error[1],
                rep.magnitude_error[2], mag16, dir4, crossing ? "yes" : "NO")};
}

// --------------------------------------------------------------- criterion 10
// Decoupled direction+magnitude vs coupled k-means at the same 12-bit rate.
Outcome c10_decoupled_vs_coupled() {
    int wins = 0;
    std::string parts;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        const ComparisonReport rep = compare_decoupled_vs_coupled(20000, 8, 12, s);
        wins += rep.decoupled.direction_mse < rep.coupled.direction_mse;
        parts += str("%sseed %llu: %.4f vs %.4f", s == 1 ? "" : "; ", (unsigned long long)s,
                     rep.decoupled.direction_mse, rep.coupled.direction_mse);
    }
    return {wins == 3,
            str("decoupled direction MSE below coupled on %d/3 seeds (%s)", wins, parts.c_str())};
}

// --------------------------------------------------------------- criterion 11
Outcome c11_serialization() {
    namespace fs = std::filesystem;
    const fs::path td = fs::temp_directory_path() / "pcdvq_acceptance";
    fs::create_directories(td);
    bool pass = true;
    std::string why;

    const DirectionCodebook cd =
        greedy_direction_codebook(enumerate_e8_directions(direction_pool_target(10)), 10, 42);
    MagnitudeCodebook cr = lloyd_max_magnitude_codebook(2, 8, 0.9999);
    std::vector<double> pts(512 * 4);
    fill_gauss_at(919, 0, pts);
    const CoupledCodebook cc = kmeans_codebook(pts, 4, 3, 5, 9);

    auto check_codebook = [&](const AnyCodebook& cb, const char* name) {
        const std::vector<std::uint8_t> b1 = std::visit(
            [](const auto& c) { return serialize_codebook(c); }, cb);
        const AnyCodebook parsed = parse_codebook(b1);
        const std::vector<std::uint8_t> b2 = std::visit(
            [](const auto& c) { return serialize_codebook(c); }, parsed);
        const fs::path p = td / (std::string(name) + ".pcdc");
        save_codebook(p.string(), cb);
        std::ifstream in(p, std::ios::binary);
        const std::vector<std::uint8_t> fb((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
        if (b1 != b2 || b1 != fb) {
            pass = false;
            why += str(" %s codebook round trip differs;", name);
        }
    };
    check_codebook(cd, "direction");
    check_codebook(cr, "magnitude");
    check_codebook(cc, "coupled");

    const int abs_pairs[3][2] = {{10, 2}, {14, 2}, {16, 2}};
    for (auto [a, b] : abs_pairs) {
        SplitMix64 rng(2711 + std::uint64_t(a));
        std::vector<VectorCode> codes(12347);
        for (auto& c : codes)
            c = VectorCode{std::uint32_t(rng.next_below(1ULL << a)),
                           std::uint32_t(rng.next_below(1ULL << b)), false};
        const std::vector<std::uint8_t> blob = pack_indices(codes, a, b);
        const std::vector<VectorCode> back = unpack_indices(blob, codes.size(), a, b);
        bool same = pack_indices(back, a, b) == blob;
        for (std::size_t i = 0; i < codes.size(); ++i)
            same = same && back[i].dir == codes[i].dir && back[i].mag == codes[i].mag;
        if (!same) {
            pass = false;
            why += str(" pack(%d,%d) round trip differs;", a, b);
        }
    }

    // Norm-matched synthesized tensor: integer radii with sum of squares equal
    // to the row count make the column scale 1, so requantization sees the same
    // regularized values and the file reproduces byte for byte.
    MagnitudeCodebook hand;
    hand.bits = 2;
    hand.k = 8;
    hand.tau = 0.9999;
    hand.entries = {1.0, 2.0, 3.0, 4.0};
    hand.boundaries = {0.0, 1.5, 2.5, 3.5, 8.0};
    RegularizedMatrix rm;
    rm.rows = 512;
    rm.cols = 3;
    rm.sign_seed = 1234;
    rm.values.resize(512 * 3);
    rm.scales.assign(3, 1.0f);
    for (std::uint32_t col = 0; col < 3; ++col) {
        std::vector<int> radii;
        radii.insert(radii.end(), 22, 1);
        radii.insert(radii.end(), 26, 3);
        radii.insert(radii.end(), 16, 4);  // 22*1 + 26*9 + 16*16 = 512 = rows
        SplitMix64 rng(17 + col);
        for (std::size_t i = radii.size(); i > 1; --i)
            std::swap(radii[i - 1], radii[rng.next_below(i)]);
        for (std::size_t g = 0; g < 64; ++g) {
            const std::size_t di = rng.next_below(1024);
            for (int d = 0; d < 8; ++d)
                rm.values[std::size_t(col) * 512 + g * 8 + d] =
                    float(radii[g] * cd.entries[di * 8 + d]);
        }
    }
    const WeightMatrix w = deregularize_matrix(rm);
    QuantConfig cfg;
    cfg.k = 8;
    cfg.a = 10;
    cfg.b = 2;
    cfg.sign_seed = 1234;
    const QuantizedTensor qt1 = quantize_tensor(w, cfg, cd, hand);
    const std::vector<std::uint8_t> qb1 = serialize_quantized_tensor(qt1);
    const QuantizedTensor parsed = parse_quantized_tensor(qb1);
    if (serialize_quantized_tensor(parsed) != qb1) {
        pass = false;
        why += " quantized tensor parse/serialize differs;";
    }
    const WeightMatrix back = dequantize_tensor(qt1, cd, hand);
    const QuantizedTensor qt2 = quantize_tensor(back, cfg, cd, hand);
    const std::vector<std::uint8_t> qb2 = serialize_quantized_tensor(qt2);
    if (qb2 != qb1) {
        pass = false;
        why += " quantize-dequantize-quantize not byte-identical;";
    }
    float worst = 0.0f;
    for (std::size_t i = 0; i < w.values.size(); ++i)
        worst = std::max(worst, std::fabs(back.values[i] - w.values[i]));
    if (!(worst < 1e-5f)) {
        pass = false;
        why += str(" reconstruction gap %.3g;", double(worst));
    }
    fs::remove_all(td);
    return {pass, pass ? "codebook + tensor + packed-index round trips byte-identical; "
                         "quantize-dequantize-quantize reproduces the file"
                       : "failed:" + why};
}

// --------------------------------------------------------------- criterion 12
Outcome c12_compression_accounting() {
    const double bpw = bits_per_weight(14, 2, 8);
    const bool pass = bpw == 2.0 && bits_per_weight(10, 2, 8) == 1.5 &&
                      bits_per_weight(16, 2, 8) == 2.25 && 16.0 / bpw == 8.0 &&
                      1.0 - bpw / 16.0 == 0.875;
    return {pass, str("a=14,b=2,k=8: %.12g bits/weight, %.12gx vs fp16, %.4g%% memory reduction "
                      "(all exact)",
                      bpw, 16.0 / bpw, 100.0 * (1.0 - bpw / 16.0))};
}

// --------------------------------------------------------------- criterion 13
Outcome c13_end_to_end() {
    const double kLimitS = 120.0;
    set_thread_override(1);
    // One-time codebook construction, excluded from the timed pipeline.
    const DirectionCodebook cd =
        greedy_direction_codebook(enumerate_e8_directions(direction_pool_target(14)), 14, 42);
    const MagnitudeCodebook cr = lloyd_max_magnitude_codebook(2, 8, 0.9999);

    WeightMatrix w{4096, 4096, std::vector<float>(std::size_t(4096) * 4096)};
    fill_gaussian(2024, std::span<float>(w.values));
    QuantConfig cfg;
    cfg.k = 8;
    cfg.a = 14;
    cfg.b = 2;
    cfg.sign_seed = 31;

    double secs[2] = {0, 0};
    std::vector<std::uint8_t> bytes[2];
    std::vector<float> recon[2];
    for (int run = 0; run < 2; ++run) {
        const auto t0 = Clock::now();
        const QuantizedTensor qt = quantize_tensor(w, cfg, cd, cr);
        bytes[run] = serialize_quantized_tensor(qt);
        recon[run] = dequantize_tensor(qt, cd, cr).values;
        secs[run] = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    set_thread_override(0);
    const bool identical =
        bytes[0] == bytes[1] && recon[0].size() == recon[1].size() &&
        std::memcmp(recon[0].data(), recon[1].data(), recon[0].size() * sizeof(float)) == 0;
    const bool pass = identical && secs[0] < kLimitS && secs[1] < kLimitS;
    return {pass, str("4096x4096 quantize+serialize+dequantize: %.1f s and %.1f s single-threaded "
                      "(limit %.0f s, codebook build excluded); outputs %s",
                      secs[0], secs[1], kLimitS, identical ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        double limit_s;
        Outcome (*fn)();
    };
    const Criterion criteria[] = {
        {"error split identity", 5, c1_error_split_identity},
        {"polar round trip", 1, c2_polar_round_trip},
        {"regularized radii vs chi(8)", 30, c3_radii_vs_chi8},
        {"chi pdf/quantile/partial expectation", 5, c4_chi_machinery},
        {"Lloyd-Max optimality", 60, c5_lloyd_optimality},
        {"E8 first shell + pool dedup", 10, c6_e8_shell_and_dedup},
        {"greedy directions beat baselines", 120, c7_greedy_beats_baselines},
        {"quantizer equals exhaustive search", 60, c8_oracle_equivalence},
        {"coupled VQ error anatomy", 300, c9_coupled_error_anatomy},
        {"decoupled vs coupled, equal rate", 300, c10_decoupled_vs_coupled},
        {"serialization round trips", 30, c11_serialization},
        {"compression accounting", 5, c12_compression_accounting},
        {"end-to-end determinism and scale", 600, c13_end_to_end},
    };

    std::printf("acceptance gate: 13 criteria, tolerances pinned in code\n");
    int failed = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, str("exception: %s", e.what())};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (secs >= c.limit_s) {
            o.pass = false;
            o.detail += str("  [over %.0f s budget]", c.limit_s);
        }
        failed += !o.pass;
        std::printf("[%2d] %s  %s: %s  (%.1f s)\n", ++index, o.pass ? "PASS" : "FAIL", c.label,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/13 passed, %d failed\n", 13 - failed, failed);
    return failed;
}
