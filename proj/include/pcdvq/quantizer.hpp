#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcdvq/codebooks.hpp"
#include "pcdvq/transforms.hpp"

namespace pcdvq {

struct QuantConfig {
    int k = 8;
    int a = 14;
    int b = 2;
    double tau = 0.9999;
    double tol = 1e-6;
    int max_iters = 200;
    std::uint64_t sign_seed = 0;
    // Optional expected codebook identities; 0 means "take whatever is passed".
    std::uint64_t dir_hash = 0;
    std::uint64_t mag_hash = 0;
};

struct VectorCode {
    std::uint32_t dir = 0;
    std::uint32_t mag = 0;
    bool degenerate = false;  // zero group, mapped to (0, 0)
};

struct QuantizedTensor {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint8_t k = 0, a = 0, b = 0, flags = 0;  // flags bit 0: degenerate group seen
    std::uint64_t sign_seed = 0;
    std::uint64_t dir_hash = 0;
    std::uint64_t mag_hash = 0;
    std::vector<float> scales;       // one per column
    std::vector<std::uint8_t> blob;  // ceil(vector_count*(a+b)/8) bytes

    std::size_t vector_count() const { return std::size_t(rows) * cols / k; }
};

// Eq-style decoupled assignment: direction by max cosine (ties: lowest index),
// magnitude by nearest radius (ties: lower radius). Zero vectors degrade to
// (0, 0) with the degenerate flag instead of throwing.
VectorCode quantize_vector(std::span<const double> v, const DirectionCodebook& cd,
                           const MagnitudeCodebook& cr);

std::vector<double> dequantize_vector(std::uint32_t dir, std::uint32_t mag,
                                      const DirectionCodebook& cd,
                                      const MagnitudeCodebook& cr);

QuantizedTensor quantize_tensor(const WeightMatrix& w, const QuantConfig& cfg,
                                const DirectionCodebook& cd, const MagnitudeCodebook& cr);

WeightMatrix dequantize_tensor(const QuantizedTensor& qt, const DirectionCodebook& cd,
                               const MagnitudeCodebook& cr);

// a+b bits per vector, direction in the low a bits, consecutive little-endian.
std::vector<std::uint8_t> pack_indices(std::span<const VectorCode> codes, int a, int b);
std::vector<VectorCode> unpack_indices(std::span<const std::uint8_t> blob,
                                       std::size_t count, int a, int b);

// Symmetric uniform baseline at tensor granularity, round-half-to-even,
// returned in dequantized form. All-zero input comes back unchanged.
WeightMatrix scalar_quantize(const WeightMatrix& w, int bits);

double bits_per_weight(int a, int b, int k);

std::vector<std::uint8_t> serialize_quantized_tensor(const QuantizedTensor& qt);
QuantizedTensor parse_quantized_tensor(std::span<const std::uint8_t> bytes);
void save_quantized_tensor(const std::string& path, const QuantizedTensor& qt);
QuantizedTensor load_quantized_tensor(const std::string& path);

}  // namespace pcdvq
