#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcdvq/codebooks.hpp"

namespace pcdvq {

// Per-vector squared error split into a radius term and an angular term:
// (|v| - |v_hat|)^2 + 2|v||v_hat|(1 - cos theta) = |v - v_hat|^2, exactly.
struct ErrorBreakdown {
    double total_mse = 0.0;
    double direction_mse = 0.0;
    double magnitude_mse = 0.0;
};

struct SensitivityReport {
    std::string axis_label;
    std::string direction_label;
    std::string magnitude_label;
    std::vector<int> axis;
    std::vector<double> direction_error;
    std::vector<double> magnitude_error;
};

struct ComparisonReport {
    std::uint64_t samples = 0;
    int k = 0;
    int total_bits = 0;
    ErrorBreakdown decoupled;
    ErrorBreakdown coupled;
};

struct CoherenceStats {
    double max_pairwise_cosine = 0.0;
    double min_pairwise_angle = 0.0;
    double mean_nearest_angle = 0.0;
};

ErrorBreakdown mse_decompose(std::span<const double> v, std::span<const double> v_hat);

// Independent-quantization protocol on i.i.d. Gaussian k-vectors: per grid
// point x, quantize only directions (2^x greedy codebook, true magnitude kept)
// and only magnitudes (2^x Lloyd-Max codebook, true direction kept); report the
// reconstruction MSE of each scheme. Direction codebooks are prefixes of one
// greedy run, so the direction column is non-increasing in x sample-wise.
SensitivityReport sensitivity_bits_experiment(std::size_t n_samples, int k,
                                              std::span<const int> bit_grid,
                                              std::uint64_t seed);

// Coupled K-means VQ per dimension on i.i.d. Gaussian data; errors averaged
// after splitting each vector's loss with mse_decompose.
SensitivityReport sensitivity_dimension_experiment(std::size_t n_samples,
                                                   std::span<const int> dim_grid, int bits,
                                                   std::uint64_t seed);

// Same Gaussian sample quantized by decoupled direction+magnitude codebooks at
// (a = total_bits - 2, b = 2) and by coupled K-means at total_bits.
ComparisonReport compare_decoupled_vs_coupled(std::size_t n_samples, int k, int total_bits,
                                              std::uint64_t seed);

CoherenceStats codebook_coherence(const DirectionCodebook& cd);

std::string render_sensitivity_table(const SensitivityReport& r);
std::string render_sensitivity_kv(const SensitivityReport& r);
std::string render_comparison_table(const ComparisonReport& r);
std::string render_comparison_kv(const ComparisonReport& r);
std::string render_coherence_kv(const CoherenceStats& s);

}  // namespace pcdvq
