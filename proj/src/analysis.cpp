#include "pcdvq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pcdvq/errors.hpp"
#include "pcdvq/parallel.hpp"
#include "pcdvq/quantizer.hpp"
#include "pcdvq/rng.hpp"

namespace pcdvq {

namespace {

// Fixed-size sample blocks: partials are accumulated serially inside a block and
// combined serially in block order, so sums are bitwise independent of the
// thread count (each sample is already a pure function of (seed, index)).
constexpr std::size_t kBlock = 4096;

void sample_vector(std::uint64_t seed, std::size_t i, int k, double* out) {
    const std::size_t pairs = (std::size_t(k) + 1) / 2;
    for (std::size_t j = 0; j < pairs; ++j) {
        GaussianPair g = gaussian_pair(seed, i * pairs + j);
        out[2 * j] = g.z0;
        if (2 * j + 1 < std::size_t(k)) out[2 * j + 1] = g.z1;
    }
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Coupled-codebook lookup in score form (argmin |v-c|^2 = argmax v.c - |c|^2/2)
// so the scan vectorizes across entries; ties resolve to the lowest index.
// Entries sit on the f32 grid, so the float SoA copy is exact.
struct CoupledScan {
    std::size_t m = 0, dim = 0;
    std::vector<float> ct;
    std::vector<double> half2;

    explicit CoupledScan(const CoupledCodebook& cb) : m(cb.size()), dim(std::size_t(cb.dim)) {
        ct.resize(m * dim);
        half2.resize(m);
        for (std::size_t e = 0; e < m; ++e) {
            double h = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double c = cb.entries[e * dim + d];
                ct[d * m + e] = float(c);
                h += c * c;
            }
            half2[e] = 0.5 * h;
        }
    }
};

std::size_t nearest_euclidean(const CoupledScan& sc, const double* v, double* acc) {
    for (std::size_t e = 0; e < sc.m; ++e) acc[e] = -sc.half2[e];
    for (std::size_t d = 0; d < sc.dim; ++d) {
        const double vd = v[d];
        const float* row = sc.ct.data() + d * sc.m;
        for (std::size_t e = 0; e < sc.m; ++e) acc[e] += double(row[e]) * vd;
    }
    double best_s = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < sc.m; ++e) best_s = acc[e] > best_s ? acc[e] : best_s;
    for (std::size_t e = 0; e < sc.m; ++e)
        if (acc[e] == best_s) return e;
    return 0;
}

void append(std::string& out, const char* fmt, auto... args) {
    char buf[192];
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
}

}  // namespace

ErrorBreakdown mse_decompose(std::span<const double> v, std::span<const double> v_hat) {
    if (v.size() != v_hat.size()) throw validation_error("vectors differ in dimension");
    double r2 = 0.0, rh2 = 0.0, dot = 0.0, total = 0.0;
    for (std::size_t d = 0; d < v.size(); ++d) {
        r2 += v[d] * v[d];
        rh2 += v_hat[d] * v_hat[d];
        dot += v[d] * v_hat[d];
        const double diff = v[d] - v_hat[d];
        total += diff * diff;
    }
    const double r = std::sqrt(r2), rh = std::sqrt(rh2);
    ErrorBreakdown out;
    out.total_mse = total;
    out.magnitude_mse = (r - rh) * (r - rh);
    if (r > 0.0 && rh > 0.0) {
        const double cos = std::clamp(dot / (r * rh), -1.0, 1.0);
        out.direction_mse = 2.0 * r * rh * (1.0 - cos);
    }
    return out;
}

SensitivityReport sensitivity_bits_experiment(std::size_t n_samples, int k,
                                              std::span<const int> bit_grid,
                                              std::uint64_t seed) {
    if (k != 8) throw validation_error("bit sensitivity runs on the 8-dimensional direction path");
    if (n_samples == 0 || bit_grid.empty()) throw validation_error("empty experiment");
    for (int b : bit_grid)
        if (b < 1 || b > 12) throw validation_error("bit grid entries must be in [1, 12]");

    const int max_bits = *std::max_element(bit_grid.begin(), bit_grid.end());
    DirectionPool pool = enumerate_e8_directions(direction_pool_target(max_bits));
    const DirectionCodebook dir = greedy_direction_codebook(pool, max_bits, hash_at(seed, 1));

    std::vector<MagnitudeCodebook> mags;
    mags.reserve(bit_grid.size());
    for (int b : bit_grid) mags.push_back(lloyd_max_magnitude_codebook(b, k, 0.9999));

    // Prefix breakpoints in increasing size; one scan serves every grid point.
    std::vector<std::size_t> order(bit_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return bit_grid[a] < bit_grid[b]; });

    const std::size_t ng = bit_grid.size();
    const std::size_t nblocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<double> dir_part(nblocks * ng, 0.0), mag_part(nblocks * ng, 0.0);
    const std::uint64_t sample_seed = hash_at(seed, 0);

#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> v(k);
        std::vector<std::size_t> pick(ng);
#pragma omp for schedule(static)
        for (std::ptrdiff_t blk = 0; blk < std::ptrdiff_t(nblocks); ++blk) {
            double* dsum = dir_part.data() + std::size_t(blk) * ng;
            double* msum = mag_part.data() + std::size_t(blk) * ng;
            const std::size_t hi = std::min(n_samples, (std::size_t(blk) + 1) * kBlock);
            for (std::size_t i = std::size_t(blk) * kBlock; i < hi; ++i) {
                sample_vector(sample_seed, i, k, v.data());
                const double r = norm(v);

                // One pass over the selection order records the argmax at every
                // prefix boundary.
                double best = -std::numeric_limits<double>::infinity();
                std::size_t arg = 0, next = 0;
                for (std::size_t e = 0; e < dir.size(); ++e) {
                    while (next < ng && e == std::size_t(1) << bit_grid[order[next]])
                        pick[order[next++]] = arg;
                    auto cw = dir.entry(e);
                    double dot = 0.0;
                    for (int d = 0; d < k; ++d) dot += cw[d] * v[d];
                    if (dot > best) {
                        best = dot;
                        arg = e;
                    }
                }
                while (next < ng) pick[order[next++]] = arg;

                for (std::size_t g = 0; g < ng; ++g) {
                    auto cw = dir.entry(pick[g]);
                    double err = 0.0;
                    for (int d = 0; d < k; ++d) {
                        double diff = v[d] - r * cw[d];
                        err += diff * diff;
                    }
                    dsum[g] += err;

                    const auto& radii = mags[g].entries;
                    double bd = std::numeric_limits<double>::infinity(), rhat = radii[0];
                    for (double c : radii) {
                        double ad = std::fabs(r - c);
                        if (ad < bd) {
                            bd = ad;
                            rhat = c;
                        }
                    }
                    msum[g] += (r - rhat) * (r - rhat);
                }
            }
        }
    }

    SensitivityReport rep;
    rep.axis_label = "bits";
    rep.direction_label = "direction_only_mse";
    rep.magnitude_label = "magnitude_only_mse";
    rep.axis.assign(bit_grid.begin(), bit_grid.end());
    rep.direction_error.assign(ng, 0.0);
    rep.magnitude_error.assign(ng, 0.0);
    for (std::size_t blk = 0; blk < nblocks; ++blk)
        for (std::size_t g = 0; g < ng; ++g) {
            rep.direction_error[g] += dir_part[blk * ng + g];
            rep.magnitude_error[g] += mag_part[blk * ng + g];
        }
    for (std::size_t g = 0; g < ng; ++g) {
        rep.direction_error[g] /= double(n_samples);
        rep.magnitude_error[g] /= double(n_samples);
    }
    return rep;
}

SensitivityReport sensitivity_dimension_experiment(std::size_t n_samples,
                                                   std::span<const int> dim_grid, int bits,
                                                   std::uint64_t seed) {
    if (n_samples == 0 || dim_grid.empty()) throw validation_error("empty experiment");
    for (int d : dim_grid)
        if (d != 2 && d != 4 && d != 8 && d != 16)
            throw validation_error("dimension grid entries must be in {2, 4, 8, 16}");
    if (bits < 1 || bits > 12) throw validation_error("coupled baseline needs bits in [1, 12]");

    SensitivityReport rep;
    rep.axis_label = "dim";
    rep.direction_label = "direction_mse";
    rep.magnitude_label = "magnitude_mse";
    rep.axis.assign(dim_grid.begin(), dim_grid.end());

    for (std::size_t gi = 0; gi < dim_grid.size(); ++gi) {
        const int k = dim_grid[gi];
        const std::uint64_t sample_seed = hash_at(seed, 2 * gi);
        std::vector<double> data(n_samples * std::size_t(k));
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n_samples); ++i)
            sample_vector(sample_seed, std::size_t(i), k, data.data() + std::size_t(i) * k);

        CoupledCodebook cb = kmeans_codebook(data, k, bits, 25, hash_at(seed, 2 * gi + 1));

        const CoupledScan sc(cb);
        const std::size_t nblocks = (n_samples + kBlock - 1) / kBlock;
        std::vector<double> dir_part(nblocks, 0.0), mag_part(nblocks, 0.0);
#pragma omp parallel num_threads(thread_count())
        {
            std::vector<double> acc(sc.m);
#pragma omp for schedule(static)
            for (std::ptrdiff_t blk = 0; blk < std::ptrdiff_t(nblocks); ++blk) {
                const std::size_t hi = std::min(n_samples, (std::size_t(blk) + 1) * kBlock);
                double ds = 0.0, ms = 0.0;
                for (std::size_t i = std::size_t(blk) * kBlock; i < hi; ++i) {
                    const double* v = data.data() + i * std::size_t(k);
                    const std::size_t e = nearest_euclidean(sc, v, acc.data());
                    ErrorBreakdown eb = mse_decompose({v, std::size_t(k)}, cb.entry(e));
                    ds += eb.direction_mse;
                    ms += eb.magnitude_mse;
                }
                dir_part[blk] = ds;
                mag_part[blk] = ms;
            }
        }
        double ds = 0.0, ms = 0.0;
        for (std::size_t blk = 0; blk < nblocks; ++blk) {
            ds += dir_part[blk];
            ms += mag_part[blk];
        }
        rep.direction_error.push_back(ds / double(n_samples));
        rep.magnitude_error.push_back(ms / double(n_samples));
    }
    return rep;
}

ComparisonReport compare_decoupled_vs_coupled(std::size_t n_samples, int k, int total_bits,
                                              std::uint64_t seed) {
    if (k != 8) throw validation_error("decoupled path is 8-dimensional");
    if (total_bits < 3 || total_bits > 12)
        throw validation_error("total bits must be in [3, 12] for the coupled baseline");
    if (n_samples == 0) throw validation_error("empty experiment");

    const int a = total_bits - 2;
    DirectionPool pool = enumerate_e8_directions(direction_pool_target(a));
    const DirectionCodebook dir = greedy_direction_codebook(pool, a, hash_at(seed, 1));
    const MagnitudeCodebook mag = lloyd_max_magnitude_codebook(2, k, 0.9999);

    const std::uint64_t sample_seed = hash_at(seed, 0);
    std::vector<double> data(n_samples * std::size_t(k));
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n_samples); ++i)
        sample_vector(sample_seed, std::size_t(i), k, data.data() + std::size_t(i) * k);

    CoupledCodebook cb = kmeans_codebook(data, k, total_bits, 25, hash_at(seed, 2));

    const CoupledScan sc(cb);
    const std::size_t nblocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<double> part(nblocks * 6, 0.0);
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> rec(k), acc(sc.m);
#pragma omp for schedule(static)
        for (std::ptrdiff_t blk = 0; blk < std::ptrdiff_t(nblocks); ++blk) {
            double* p = part.data() + std::size_t(blk) * 6;
            const std::size_t hi = std::min(n_samples, (std::size_t(blk) + 1) * kBlock);
            for (std::size_t i = std::size_t(blk) * kBlock; i < hi; ++i) {
                std::span<const double> v(data.data() + i * std::size_t(k), std::size_t(k));

                VectorCode code = quantize_vector(v, dir, mag);
                auto e = dir.entry(code.dir);
                const double r = mag.entries[code.mag];
                for (int d = 0; d < k; ++d) rec[d] = r * e[d];
                ErrorBreakdown de = mse_decompose(v, rec);
                p[0] += de.total_mse;
                p[1] += de.direction_mse;
                p[2] += de.magnitude_mse;

                const std::size_t ce_idx = nearest_euclidean(sc, v.data(), acc.data());
                ErrorBreakdown ce = mse_decompose(v, cb.entry(ce_idx));
                p[3] += ce.total_mse;
                p[4] += ce.direction_mse;
                p[5] += ce.magnitude_mse;
            }
        }
    }

    double sums[6] = {};
    for (std::size_t blk = 0; blk < nblocks; ++blk)
        for (int j = 0; j < 6; ++j) sums[j] += part[blk * 6 + j];

    ComparisonReport rep;
    rep.samples = n_samples;
    rep.k = k;
    rep.total_bits = total_bits;
    rep.decoupled = {sums[0] / double(n_samples), sums[1] / double(n_samples),
                     sums[2] / double(n_samples)};
    rep.coupled = {sums[3] / double(n_samples), sums[4] / double(n_samples),
                   sums[5] / double(n_samples)};
    return rep;
}

CoherenceStats codebook_coherence(const DirectionCodebook& cd) {
    const std::size_t n = cd.size();
    if (n < 2) throw validation_error("coherence needs at least two entries");

    std::vector<double> nearest(n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
        auto a = cd.entry(std::size_t(i));
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == std::size_t(i)) continue;
            auto b = cd.entry(j);
            double dot = 0.0;
            for (std::size_t d = 0; d < a.size(); ++d) dot += a[d] * b[d];
            best = dot > best ? dot : best;
        }
        nearest[i] = best;
    }

    CoherenceStats s;
    s.max_pairwise_cosine = -std::numeric_limits<double>::infinity();
    double angle_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s.max_pairwise_cosine = std::max(s.max_pairwise_cosine, nearest[i]);
        angle_sum += std::acos(std::clamp(nearest[i], -1.0, 1.0));
    }
    s.min_pairwise_angle = std::acos(std::clamp(s.max_pairwise_cosine, -1.0, 1.0));
    s.mean_nearest_angle = angle_sum / double(n);
    return s;
}

std::string render_sensitivity_table(const SensitivityReport& r) {
    std::string out;
    append(out, "%6s  %18s  %18s\n", r.axis_label.c_str(), r.direction_label.c_str(),
           r.magnitude_label.c_str());
    for (std::size_t i = 0; i < r.axis.size(); ++i)
        append(out, "%6d  %18.9f  %18.9f\n", r.axis[i], r.direction_error[i],
               r.magnitude_error[i]);
    return out;
}

std::string render_sensitivity_kv(const SensitivityReport& r) {
    std::string out;
    for (std::size_t i = 0; i < r.axis.size(); ++i) {
        append(out, "%s.%d.%s: %.12g\n", r.axis_label.c_str(), r.axis[i],
               r.direction_label.c_str(), r.direction_error[i]);
        append(out, "%s.%d.%s: %.12g\n", r.axis_label.c_str(), r.axis[i],
               r.magnitude_label.c_str(), r.magnitude_error[i]);
    }
    return out;
}

std::string render_comparison_table(const ComparisonReport& r) {
    std::string out;
    append(out, "scheme       %14s  %14s  %14s   (k=%d, %d bits, %llu samples)\n", "total_mse",
           "direction_mse", "magnitude_mse", r.k, r.total_bits,
           static_cast<unsigned long long>(r.samples));
    append(out, "decoupled    %14.9f  %14.9f  %14.9f\n", r.decoupled.total_mse,
           r.decoupled.direction_mse, r.decoupled.magnitude_mse);
    append(out, "coupled      %14.9f  %14.9f  %14.9f\n", r.coupled.total_mse,
           r.coupled.direction_mse, r.coupled.magnitude_mse);
    return out;
}

std::string render_comparison_kv(const ComparisonReport& r) {
    std::string out;
    append(out, "samples: %llu\n", static_cast<unsigned long long>(r.samples));
    append(out, "k: %d\n", r.k);
    append(out, "total_bits: %d\n", r.total_bits);
    append(out, "decoupled.total_mse: %.12g\n", r.decoupled.total_mse);
    append(out, "decoupled.direction_mse: %.12g\n", r.decoupled.direction_mse);
    append(out, "decoupled.magnitude_mse: %.12g\n", r.decoupled.magnitude_mse);
    append(out, "coupled.total_mse: %.12g\n", r.coupled.total_mse);
    append(out, "coupled.direction_mse: %.12g\n", r.coupled.direction_mse);
    append(out, "coupled.magnitude_mse: %.12g\n", r.coupled.magnitude_mse);
    return out;
}

std::string render_coherence_kv(const CoherenceStats& s) {
    std::string out;
    append(out, "max_pairwise_cosine: %.12g\n", s.max_pairwise_cosine);
    append(out, "min_pairwise_angle: %.12g\n", s.min_pairwise_angle);
    append(out, "mean_nearest_angle: %.12g\n", s.mean_nearest_angle);
    return out;
}

}  // namespace pcdvq
