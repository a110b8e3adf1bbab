#pragma once

#include <cstdint>

#include "pcdvq/codebooks.hpp"
#include "pcdvq/quantizer.hpp"
#include "pcdvq/transforms.hpp"

// Single-threaded twins of the OpenMP kernels, written as plain loops. They
// must produce bit-identical results at any worker count; the parallel tests
// and the benchmark target hold the production kernels to that contract.
namespace pcdvq::reference {

RegularizedMatrix regularize_matrix(const WeightMatrix& w, std::uint64_t sign_seed);
WeightMatrix deregularize_matrix(const RegularizedMatrix& r);

QuantizedTensor quantize_tensor(const WeightMatrix& w, const QuantConfig& cfg,
                                const DirectionCodebook& cd, const MagnitudeCodebook& cr);
WeightMatrix dequantize_tensor(const QuantizedTensor& qt, const DirectionCodebook& cd,
                               const MagnitudeCodebook& cr);

WeightMatrix scalar_quantize(const WeightMatrix& w, int bits);

}  // namespace pcdvq::reference
