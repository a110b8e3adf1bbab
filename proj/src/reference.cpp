#include "pcdvq/reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pcdvq/errors.hpp"
#include "pcdvq/fwht.hpp"

namespace pcdvq::reference {

namespace {

void check_matrix(std::uint32_t rows, std::uint32_t cols, std::span<const float> values,
                  const char* who) {
    if (rows == 0 || cols == 0) throw validation_error(std::string(who) + ": empty matrix");
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

    std::vector<double> col(p);
    for (std::uint32_t j = 0; j < q; ++j) {
        double norm2 = 0.0;
        for (std::uint32_t i = 0; i < p; ++i) {
            const double v = w.values[std::size_t(i) * q + j];
            col[i] = v;
            norm2 += v * v;
        }
        const float scale = static_cast<float>(std::sqrt(norm2 / p));
        out.scales[j] = scale;
        if (scale == 0.0f)
            throw validation_error("regularize_matrix: zero-norm column, scale undefined");
        randomized_hadamard(col, sign_seed);
        const double inv = 1.0 / static_cast<double>(scale);
        float* dst = out.values.data() + std::size_t(j) * p;
        for (std::uint32_t i = 0; i < p; ++i) dst[i] = static_cast<float>(col[i] * inv);
    }
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

    std::vector<double> col(p);
    for (std::uint32_t j = 0; j < q; ++j) {
        const float* src = r.values.data() + std::size_t(j) * p;
        const double scale = r.scales[j];
        for (std::uint32_t i = 0; i < p; ++i) col[i] = scale * src[i];
        inverse_randomized_hadamard(col, r.sign_seed);
        for (std::uint32_t i = 0; i < p; ++i)
            out.values[std::size_t(i) * q + j] = static_cast<float>(col[i]);
    }
    return out;
}

QuantizedTensor quantize_tensor(const WeightMatrix& w, const QuantConfig& cfg,
                                const DirectionCodebook& cd, const MagnitudeCodebook& cr) {
    if (cfg.k != cd.dim || cfg.a != cd.bits || cfg.b != cr.bits || cfg.a < 1 || cfg.b < 1)
        throw validation_error("config does not match codebooks");
    if (cfg.dir_hash != 0 && cfg.dir_hash != codebook_hash(cd))
        throw codebook_mismatch_error("direction codebook hash mismatch");
    if (cfg.mag_hash != 0 && cfg.mag_hash != codebook_hash(cr))
        throw codebook_mismatch_error("magnitude codebook hash mismatch");
    if (w.rows % cfg.k != 0) throw validation_error("tensor rows not divisible by group size");

    RegularizedMatrix rm = reference::regularize_matrix(w, cfg.sign_seed);
    const std::size_t groups = std::size_t(w.rows) * w.cols / cfg.k;
    const std::size_t gpc = std::size_t(w.rows) / cfg.k;

    std::vector<VectorCode> codes(groups);
    std::vector<double> v(cfg.k);
    bool degenerate = false;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t col = g / gpc;
        const std::size_t off = g % gpc * cfg.k;
        auto column = rm.column(std::uint32_t(col));
        for (int d = 0; d < cfg.k; ++d) v[d] = column[off + d];
        codes[g] = quantize_vector(v, cd, cr);
        degenerate = degenerate || codes[g].degenerate;
    }

    QuantizedTensor qt;
    qt.rows = w.rows;
    qt.cols = w.cols;
    qt.k = std::uint8_t(cfg.k);
    qt.a = std::uint8_t(cfg.a);
    qt.b = std::uint8_t(cfg.b);
    qt.flags = degenerate ? 1 : 0;
    qt.sign_seed = cfg.sign_seed;
    qt.dir_hash = codebook_hash(cd);
    qt.mag_hash = codebook_hash(cr);
    qt.scales = rm.scales;
    qt.blob = pack_indices(codes, cfg.a, cfg.b);
    return qt;
}

WeightMatrix dequantize_tensor(const QuantizedTensor& qt, const DirectionCodebook& cd,
                               const MagnitudeCodebook& cr) {
    if (qt.k != cd.dim || qt.a != cd.bits || qt.b != cr.bits)
        throw validation_error("quantized tensor geometry does not match codebooks");
    if (qt.dir_hash != codebook_hash(cd))
        throw codebook_mismatch_error("direction codebook hash mismatch");
    if (qt.mag_hash != codebook_hash(cr))
        throw codebook_mismatch_error("magnitude codebook hash mismatch");
    if (qt.rows == 0 || qt.cols == 0) throw validation_error("empty tensor");
    if (qt.rows % qt.k != 0) throw validation_error("tensor rows not divisible by group size");
    if (qt.scales.size() != qt.cols) throw validation_error("scale count != column count");

    const std::size_t groups = qt.vector_count();
    std::vector<VectorCode> codes = unpack_indices(qt.blob, groups, qt.a, qt.b);
    for (const VectorCode& c : codes) {
        if (c.dir >= cd.size()) throw validation_error("direction index out of range");
        if (c.mag >= cr.entries.size()) throw validation_error("magnitude index out of range");
    }

    RegularizedMatrix rm;
    rm.rows = qt.rows;
    rm.cols = qt.cols;
    rm.sign_seed = qt.sign_seed;
    rm.scales = qt.scales;
    rm.values.resize(std::size_t(qt.rows) * qt.cols);
    const std::size_t gpc = std::size_t(qt.rows) / qt.k;

    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t col = g / gpc;
        const std::size_t off = g % gpc * qt.k;
        auto e = cd.entry(codes[g].dir);
        const double r = cr.entries[codes[g].mag];
        float* out = rm.values.data() + col * qt.rows + off;
        for (int d = 0; d < qt.k; ++d) out[d] = float(r * e[d]);
    }
    return reference::deregularize_matrix(rm);
}

WeightMatrix scalar_quantize(const WeightMatrix& w, int bits) {
    if (bits < 2 || bits > 8) throw validation_error("scalar quantizer bits must be in [2, 8]");
    if (w.values.size() != std::size_t(w.rows) * w.cols)
        throw validation_error("matrix shape does not match value count");
    double peak = 0.0;
    for (float x : w.values) {
        if (!std::isfinite(x)) throw validation_error("matrix has non-finite values");
        peak = std::max(peak, std::fabs(double(x)));
    }
    if (peak == 0.0) return w;

    const double lo = -double(std::uint64_t(1) << (bits - 1));
    const double hi = -lo - 1.0;
    const double s = peak / hi;
    WeightMatrix out = w;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double q = std::nearbyint(double(out.values[i]) / s);
        q = std::min(std::max(q, lo), hi);
        out.values[i] = float(q * s);
    }
    return out;
}

}  // namespace pcdvq::reference
