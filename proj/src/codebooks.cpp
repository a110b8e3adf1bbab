#include "pcdvq/codebooks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "pcdvq/chi.hpp"
#include "pcdvq/errors.hpp"
#include "pcdvq/parallel.hpp"
#include "pcdvq/rng.hpp"

namespace pcdvq {

namespace {

double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// E8 point in doubled coordinates (all components of y = 2x are integers of one
// parity with sum divisible by 4). Shell m holds |x|^2 = 2m, i.e. |y|^2 = 8m.
struct PrimitiveKey {
    std::array<std::int8_t, 8> v;
    bool operator==(const PrimitiveKey&) const = default;
};

struct PrimitiveKeyHash {
    std::size_t operator()(const PrimitiveKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::int8_t c : k.v) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

void enumerate_shell(int norm2_doubled, std::vector<std::array<int, 8>>& out) {
    // DFS in lexicographic order; coordinate 0 fixes the parity of the rest.
    std::array<int, 8> y{};
    const int c = static_cast<int>(std::sqrt(static_cast<double>(norm2_doubled))) + 1;
    auto rec = [&](auto&& self, int depth, int remaining, int sum, int parity) -> void {
        if (depth == 8) {
            if (remaining == 0 && sum % 4 == 0) out.push_back(y);
            return;
        }
        const int later = 7 - depth;
        for (int v = -c; v <= c; ++v) {
            const int vp = v & 1;  // two's complement: 1 for any odd v
            if (depth > 0 && vp != parity) continue;
            const int v2 = v * v;
            if (v2 > remaining) continue;
            if (remaining - v2 > later * c * c) continue;       // rest can't absorb budget
            if (vp == 1 && remaining - v2 < later) continue;    // odd coords are nonzero
            y[depth] = v;
            self(self, depth + 1, remaining - v2, sum + v, vp);
        }
        y[depth] = 0;
    };
    rec(rec, 0, norm2_doubled, 0, 0);
}

}  // namespace

DirectionPool enumerate_e8_directions(std::size_t min_count) {
    if (min_count < 1) throw validation_error("enumerate_e8_directions: min_count >= 1");

    DirectionPool pool;
    std::unordered_set<PrimitiveKey, PrimitiveKeyHash> seen;
    std::vector<std::array<int, 8>> shell;

    for (int m = 1; pool.count() < min_count; ++m) {
        if (m > 64) throw validation_error("enumerate_e8_directions: shell budget exceeded");
        shell.clear();
        enumerate_shell(8 * m, shell);
        for (const auto& y : shell) {
            int g = 0;
            for (int v : y) g = std::gcd(g, std::abs(v));
            PrimitiveKey key{};
            for (int i = 0; i < 8; ++i) key.v[i] = static_cast<std::int8_t>(y[i] / g);
            if (!seen.insert(key).second) continue;
            const double inv = 1.0 / std::sqrt(8.0 * m);  // |y| = sqrt(8m)
            for (int i = 0; i < 8; ++i) pool.values.push_back(y[i] * inv);
        }
        pool.shells_used = m;
    }
    return pool;
}

DirectionCodebook greedy_direction_codebook(std::span<const double> pool, int dim, int bits,
                                            std::uint64_t seed) {
    if (dim < 1) throw validation_error("greedy_direction_codebook: dim >= 1");
    if (bits < 1 || bits > 24) throw validation_error("greedy_direction_codebook: bits in [1, 24]");
    if (pool.size() % dim != 0)
        throw validation_error("greedy_direction_codebook: pool size not a multiple of dim");
    const std::size_t n_pool = pool.size() / dim;
    const std::size_t n_sel = std::size_t(1) << bits;
    if (n_pool < n_sel)
        throw validation_error("greedy_direction_codebook: pool holds " + std::to_string(n_pool) +
                               " directions but 2^" + std::to_string(bits) + " = " +
                               std::to_string(n_sel) + " are required");
    for (std::size_t i = 0; i < n_pool; ++i) {
        double norm2 = 0.0;
        for (int d = 0; d < dim; ++d) norm2 += pool[i * dim + d] * pool[i * dim + d];
        if (std::abs(norm2 - 1.0) > 1e-6)
            throw validation_error("greedy_direction_codebook: pool entry not unit norm");
    }

    SplitMix64 rng(seed);
    const std::size_t first = rng.next_below(n_pool);

    // max_cos[i] = max cosine between candidate i and the selected set so far.
    std::vector<double> max_cos(n_pool);
    std::vector<char> taken(n_pool, 0);
    std::vector<std::size_t> selected;
    selected.reserve(n_sel);

    auto update_against = [&](std::size_t chosen) {
        const double* e = pool.data() + chosen * dim;
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::int64_t i = 0; i < std::int64_t(n_pool); ++i) {
            if (taken[i]) continue;
            double dot = 0.0;
            for (int d = 0; d < dim; ++d) dot += pool[std::size_t(i) * dim + d] * e[d];
            if (dot > max_cos[i]) max_cos[i] = dot;
        }
    };

    taken[first] = 1;
    selected.push_back(first);
    std::fill(max_cos.begin(), max_cos.end(), -std::numeric_limits<double>::infinity());
    update_against(first);

    while (selected.size() < n_sel) {
        std::size_t best = n_pool;
        double best_val = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_pool; ++i) {
            if (taken[i]) continue;
            if (max_cos[i] < best_val) {
                best_val = max_cos[i];
                best = i;
            }
        }
        taken[best] = 1;
        selected.push_back(best);
        update_against(best);
    }

    DirectionCodebook cb;
    cb.dim = dim;
    cb.bits = bits;
    cb.provenance = {n_pool, 0, seed};
    cb.entries.reserve(n_sel * dim);
    for (std::size_t idx : selected) {
        double norm2 = 0.0;
        for (int d = 0; d < dim; ++d) norm2 += pool[idx * dim + d] * pool[idx * dim + d];
        const double inv = 1.0 / std::sqrt(norm2);
        for (int d = 0; d < dim; ++d)
            cb.entries.push_back(round_f32(pool[idx * dim + d] * inv));
    }
    return cb;
}

DirectionCodebook greedy_direction_codebook(const DirectionPool& pool, int bits,
                                            std::uint64_t seed) {
    auto cb = greedy_direction_codebook(std::span<const double>(pool.values), 8, bits, seed);
    cb.provenance.shells_used = pool.shells_used;
    return cb;
}

MagnitudeCodebook lloyd_max_magnitude_codebook(int bits, int k, double tau, double tol,
                                               int max_iters) {
    if (bits < 0 || bits > 24)
        throw validation_error("lloyd_max_magnitude_codebook: bits in [0, 24]");
    if (!(tau > 0.0 && tau < 1.0))
        throw validation_error("lloyd_max_magnitude_codebook: tau in (0, 1)");
    if (!(tol > 0.0)) throw validation_error("lloyd_max_magnitude_codebook: tol > 0");
    if (max_iters < 1) throw validation_error("lloyd_max_magnitude_codebook: max_iters >= 1");

    const ChiDistribution chi(k);
    const double max_r = chi.quantile(tau);
    const std::size_t n = std::size_t(1) << bits;

    std::vector<double> entries(n), bounds(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        entries[i] = (i + 0.5) * max_r / static_cast<double>(n);

    auto refresh_bounds = [&] {
        bounds[0] = 0.0;
        bounds[n] = max_r;
        for (std::size_t i = 1; i < n; ++i) bounds[i] = 0.5 * (entries[i - 1] + entries[i]);
    };

    MagnitudeCodebook cb;
    cb.bits = bits;
    cb.k = k;
    cb.tau = tau;

    // Second partial moment via t^2 f_k(t) = k f_{k+2}(t): the quadratic term
    // becomes a chi(k+2) cdf difference, so per-iteration distortion is exact.
    const ChiDistribution chi_plus2(k + 2);
    auto cell_distortion = [&](double lo, double hi, double e) {
        const double s0 = chi.cdf(hi) - chi.cdf(lo);
        const double s1 = chi.partial_expectation(lo, hi);
        const double s2 = double(k) * (chi_plus2.cdf(hi) - chi_plus2.cdf(lo));
        return s2 - 2.0 * e * s1 + e * e * s0;
    };

    double movement = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        refresh_bounds();
        movement = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mass = chi.cdf(bounds[i + 1]) - chi.cdf(bounds[i]);
            const double cur =
                mass > 0.0 ? chi.partial_expectation(bounds[i], bounds[i + 1]) / mass
                           : entries[i];
            movement = std::max(movement, std::abs(cur - entries[i]));
            entries[i] = cur;
        }
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            dist += cell_distortion(bounds[i], bounds[i + 1], entries[i]);
        cb.distortion_history.push_back(dist / tau);  // normalized to the truncated law
        cb.iterations = it + 1;
        if (movement < tol) {
            cb.converged = true;
            break;
        }
    }
    cb.final_movement = movement;

    for (double& e : entries) e = round_f32(e);
    refresh_bounds();
    for (double& b : bounds) b = round_f32(b);
    cb.entries = std::move(entries);
    cb.boundaries = std::move(bounds);
    return cb;
}

CoupledCodebook kmeans_codebook(std::span<const double> vectors, int dim, int n_bits,
                                int iters, std::uint64_t seed) {
    if (dim < 1) throw validation_error("kmeans_codebook: dim >= 1");
    if (n_bits < 0 || n_bits > 24) throw validation_error("kmeans_codebook: n_bits in [0, 24]");
    if (iters < 0) throw validation_error("kmeans_codebook: iters >= 0");
    if (vectors.size() % dim != 0)
        throw validation_error("kmeans_codebook: vector data not a multiple of dim");
    const std::size_t n = vectors.size() / dim;
    const std::size_t m = std::size_t(1) << n_bits;
    if (n < m) throw validation_error("kmeans_codebook: fewer vectors than centers");
    for (double v : vectors)
        if (!std::isfinite(v)) throw validation_error("kmeans_codebook: non-finite input");

    auto point = [&](std::size_t i) { return vectors.data() + i * dim; };
    auto dist2 = [&](const double* a, const double* b) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double diff = a[d] - b[d];
            s += diff * diff;
        }
        return s;
    };

    std::vector<double> centers(m * dim);
    SplitMix64 rng(seed);

    // k-means++: D^2-weighted picks over a prefix walk.
    std::vector<double> mind(n);
    {
        const std::size_t c0 = rng.next_below(n);
        std::copy_n(point(c0), dim, centers.begin());
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::int64_t i = 0; i < std::int64_t(n); ++i)
            mind[i] = dist2(point(i), centers.data());
        for (std::size_t c = 1; c < m; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += mind[i];
            std::size_t pick = n;
            if (total > 0.0) {
                const double u = rng.next_unit() * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += mind[i];
                    if (acc >= u) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) pick = n - 1;  // guard against fp shortfall
            } else {
                // all remaining mass zero: duplicate-heavy input; take the
                // first point, weights cannot distinguish them anyway
                pick = 0;
            }
            double* dst = centers.data() + c * dim;
            std::copy_n(point(pick), dim, dst);
#pragma omp parallel for schedule(static) num_threads(thread_count())
            for (std::int64_t i = 0; i < std::int64_t(n); ++i)
                mind[i] = std::min(mind[i], dist2(point(i), dst));
        }
    }

    std::vector<std::uint32_t> assign(n, 0);
    std::vector<double> sums(m * dim);
    std::vector<std::size_t> counts(m);

    // Assignment in score form: argmin |x-c|^2 = argmax x.c - |c|^2/2. The
    // per-center accumulators are independent sums, so the scan vectorizes
    // without reassociating any single sum; ties still go to the lowest index.
    std::vector<double> ct(m * dim), half2(m), x2(n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::int64_t i = 0; i < std::int64_t(n); ++i) {
        const double* x = point(i);
        double s = 0.0;
        for (int d = 0; d < dim; ++d) s += x[d] * x[d];
        x2[i] = s;
    }

    for (int it = 0; it < iters; ++it) {
        for (std::size_t c = 0; c < m; ++c) {
            double h = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double v = centers[c * dim + d];
                ct[std::size_t(d) * m + c] = v;
                h += v * v;
            }
            half2[c] = 0.5 * h;
        }

        bool changed = false;
#pragma omp parallel num_threads(thread_count())
        {
            std::vector<double> acc(m);
#pragma omp for schedule(static) reduction(|| : changed)
            for (std::int64_t i = 0; i < std::int64_t(n); ++i) {
                const double* x = point(i);
                for (std::size_t c = 0; c < m; ++c) acc[c] = -half2[c];
                for (int d = 0; d < dim; ++d) {
                    const double xd = x[d];
                    const double* row = ct.data() + std::size_t(d) * m;
                    for (std::size_t c = 0; c < m; ++c) acc[c] += row[c] * xd;
                }
                double best_s = -std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < m; ++c) best_s = acc[c] > best_s ? acc[c] : best_s;
                std::uint32_t best = 0;
                for (std::size_t c = 0; c < m; ++c)
                    if (acc[c] == best_s) {
                        best = static_cast<std::uint32_t>(c);
                        break;
                    }
                mind[i] = x2[i] - 2.0 * best_s;
                if (assign[i] != best) {
                    assign[i] = best;
                    changed = true;
                }
            }
        }
        if (!changed && it > 0) break;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = point(i);
            double* s = sums.data() + std::size_t(assign[i]) * dim;
            for (int d = 0; d < dim; ++d) s[d] += x[d];
            ++counts[assign[i]];
        }

        for (std::size_t c = 0; c < m; ++c) {
            if (counts[c] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[c]);
                for (int d = 0; d < dim; ++d) centers[c * dim + d] = sums[c * dim + d] * inv;
            } else {
                // re-seed to the point farthest from its assigned center
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i)
                    if (mind[i] > far_d) {
                        far_d = mind[i];
                        far = i;
                    }
                std::copy_n(point(far), dim, centers.begin() + c * dim);
                mind[far] = -1.0;  // not available to another empty cluster this round
            }
        }
    }

    CoupledCodebook cb;
    cb.dim = dim;
    cb.bits = n_bits;
    cb.entries.assign(centers.begin(), centers.end());
    for (double& v : cb.entries) v = round_f32(v);
    return cb;
}

}  // namespace pcdvq
