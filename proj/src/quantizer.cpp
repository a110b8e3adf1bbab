#include "pcdvq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "pcdvq/errors.hpp"
#include "pcdvq/fwht.hpp"
#include "pcdvq/parallel.hpp"
#include "wire.hpp"

namespace pcdvq {

namespace {

void check_pair(const DirectionCodebook& cd, const MagnitudeCodebook& cr) {
    if (cr.k != cd.dim)
        throw validation_error("direction and magnitude codebooks disagree on group size");
}

void check_config(const QuantConfig& cfg, const DirectionCodebook& cd,
                  const MagnitudeCodebook& cr) {
    check_pair(cd, cr);
    if (cfg.a < 1 || cfg.b < 1) throw validation_error("direction and magnitude bits must be >= 1");
    if (cfg.k != cd.dim) throw validation_error("config group size does not match codebook");
    if (cfg.a != cd.bits) throw validation_error("config direction bits do not match codebook");
    if (cfg.b != cr.bits) throw validation_error("config magnitude bits do not match codebook");
    std::uint64_t dh = codebook_hash(cd), mh = codebook_hash(cr);
    if (cfg.dir_hash != 0 && cfg.dir_hash != dh)
        throw codebook_mismatch_error("direction codebook hash does not match config");
    if (cfg.mag_hash != 0 && cfg.mag_hash != mh)
        throw codebook_mismatch_error("magnitude codebook hash does not match config");
}

// Codebook scan state shared by every group of one tensor: entries transposed
// to dimension-major float (exact f64 values, the entries live on the f32 grid).
struct DirScan {
    std::size_t dim = 0;
    std::size_t n = 0;
    std::vector<float> ct;  // ct[d * n + j] = entry j, coordinate d

    explicit DirScan(const DirectionCodebook& cd) : dim(cd.dim), n(cd.size()) {
        ct.resize(dim * n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t d = 0; d < dim; ++d)
                ct[d * n + j] = float(cd.entries[j * dim + d]);  // exact: f32-grid values
    }
};

// Left-to-right accumulation over d for every entry, then first index attaining
// the maximum, for a tile of nv vectors at once. Bitwise identical to the
// per-entry loop in quantize_vector: each (vector, entry) sum keeps its d order;
// chunking and tiling only reorder work between independent sums so the
// accumulator slice stays cache resident and each codebook chunk is read once
// per tile instead of once per vector.
void scan_direction_tile(const DirScan& s, const double* v, std::size_t nv, double* acc,
                         std::uint32_t* out) {
    const std::size_t n = s.n;
    constexpr std::size_t kChunk = 2048;
    for (std::size_t j0 = 0; j0 < n; j0 += kChunk) {
        const std::size_t j1 = std::min(n, j0 + kChunk);
        for (std::size_t t = 0; t < nv; ++t) {
            double* a = acc + t * n;
            const double* vt = v + t * s.dim;
            for (std::size_t j = j0; j < j1; ++j) a[j] = 0.0;
            for (std::size_t d = 0; d < s.dim; ++d) {
                const float* row = s.ct.data() + d * n;
                const double vd = vt[d];
                for (std::size_t j = j0; j < j1; ++j) a[j] += double(row[j]) * vd;
            }
        }
    }
    // Max over finite values is order independent, so the lane-blocked pass
    // (which the compiler turns into vector max) gives the same best value as
    // a left-to-right scan; ties still resolve to the lowest index.
    constexpr std::size_t kLanes = 16;
    for (std::size_t t = 0; t < nv; ++t) {
        const double* a = acc + t * n;
        double best = -std::numeric_limits<double>::infinity();
        std::size_t j = 0;
        if (n >= kLanes) {
            double lane[kLanes];
            for (std::size_t l = 0; l < kLanes; ++l) lane[l] = a[l];
            const std::size_t nb = n - n % kLanes;
            for (j = kLanes; j < nb; j += kLanes)
                for (std::size_t l = 0; l < kLanes; ++l)
                    lane[l] = a[j + l] > lane[l] ? a[j + l] : lane[l];
            for (std::size_t l = 0; l < kLanes; ++l) best = lane[l] > best ? lane[l] : best;
        }
        for (; j < n; ++j) best = a[j] > best ? a[j] : best;
        out[t] = 0;  // unreachable fallback: n >= 1 and a is finite
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i] == best) {
                out[t] = std::uint32_t(i);
                break;
            }
        }
    }
}

std::uint32_t scan_direction(const DirScan& s, const double* v, double* acc) {
    std::uint32_t out = 0;
    scan_direction_tile(s, v, 1, acc, &out);
    return out;
}

std::uint32_t scan_magnitude(const MagnitudeCodebook& cr, double r) {
    std::uint32_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cr.entries.size(); ++j) {
        double d = std::fabs(r - double(cr.entries[j]));
        if (d < bd) {
            bd = d;
            best = std::uint32_t(j);
        }
    }
    return best;
}

}  // namespace

VectorCode quantize_vector(std::span<const double> v, const DirectionCodebook& cd,
                           const MagnitudeCodebook& cr) {
    check_pair(cd, cr);
    if (v.size() != std::size_t(cd.dim)) throw validation_error("vector length != group size");
    for (double x : v)
        if (!std::isfinite(x)) throw validation_error("vector has non-finite values");

    double r2 = 0.0;
    for (double x : v) r2 += x * x;
    if (r2 == 0.0) return VectorCode{0, 0, true};
    double r = std::sqrt(r2);

    // Cosine ordering equals dot ordering: r > 0 is a shared positive factor.
    std::uint32_t dir = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cd.size(); ++j) {
        auto e = cd.entry(j);
        double dot = 0.0;
        for (std::size_t d = 0; d < std::size_t(cd.dim); ++d) dot += e[d] * v[d];
        if (dot > best) {
            best = dot;
            dir = std::uint32_t(j);
        }
    }
    return VectorCode{dir, scan_magnitude(cr, r), false};
}

std::vector<double> dequantize_vector(std::uint32_t dir, std::uint32_t mag,
                                      const DirectionCodebook& cd,
                                      const MagnitudeCodebook& cr) {
    check_pair(cd, cr);
    if (dir >= cd.size()) throw validation_error("direction index out of range");
    if (mag >= cr.entries.size()) throw validation_error("magnitude index out of range");
    auto e = cd.entry(dir);
    double r = cr.entries[mag];
    std::vector<double> out(cd.dim);
    for (std::size_t d = 0; d < std::size_t(cd.dim); ++d) out[d] = r * e[d];
    return out;
}

QuantizedTensor quantize_tensor(const WeightMatrix& w, const QuantConfig& cfg,
                                const DirectionCodebook& cd, const MagnitudeCodebook& cr) {
    check_config(cfg, cd, cr);
    if (std::size_t(w.rows) * w.cols % cfg.k != 0)
        throw validation_error("tensor size not divisible by group size");
    // Groups never straddle columns; the per-column Gaussian guarantee holds per group.
    if (w.rows % cfg.k != 0) throw validation_error("tensor rows not divisible by group size");

    RegularizedMatrix rm = regularize_matrix(w, cfg.sign_seed);
    const std::size_t total = std::size_t(w.rows) * w.cols;
    const std::size_t groups = total / cfg.k;
    const std::size_t gpc = std::size_t(w.rows) / cfg.k;  // rows is a power of two >= k

    DirScan scan(cd);
    std::vector<VectorCode> codes(groups);
    bool degenerate = false;

    constexpr std::size_t kTile = 8;
    const std::size_t tiles = (groups + kTile - 1) / kTile;

#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> acc(kTile * scan.n);
        std::vector<double> v(kTile * cfg.k);
        std::vector<double> radius(kTile);
        std::vector<std::uint32_t> dir(kTile);
        std::vector<std::size_t> slot(kTile);  // group index behind each scan slot
#pragma omp for schedule(static) reduction(|| : degenerate)
        for (std::ptrdiff_t t = 0; t < std::ptrdiff_t(tiles); ++t) {
            const std::size_t g0 = std::size_t(t) * kTile;
            const std::size_t g1 = std::min(groups, g0 + kTile);
            std::size_t nv = 0;
            for (std::size_t g = g0; g < g1; ++g) {
                const std::size_t col = g / gpc;
                const std::size_t off = g % gpc * cfg.k;
                auto column = rm.column(col);
                double* vt = v.data() + nv * cfg.k;
                double r2 = 0.0;
                for (int d = 0; d < cfg.k; ++d) {
                    vt[d] = column[off + d];
                    r2 += vt[d] * vt[d];
                }
                if (r2 == 0.0) {
                    codes[g] = VectorCode{0, 0, true};
                    degenerate = true;
                    continue;
                }
                radius[nv] = std::sqrt(r2);
                slot[nv] = g;
                ++nv;
            }
            if (nv == 0) continue;
            scan_direction_tile(scan, v.data(), nv, acc.data(), dir.data());
            for (std::size_t i = 0; i < nv; ++i)
                codes[slot[i]] = VectorCode{dir[i], scan_magnitude(cr, radius[i]), false};
        }
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
    check_pair(cd, cr);
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

#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t g = 0; g < std::ptrdiff_t(groups); ++g) {
        const std::size_t col = std::size_t(g) / gpc;
        const std::size_t off = std::size_t(g) % gpc * qt.k;
        auto e = cd.entry(codes[g].dir);
        const double r = cr.entries[codes[g].mag];
        float* out = rm.values.data() + col * qt.rows + off;
        for (int d = 0; d < qt.k; ++d) out[d] = float(r * e[d]);
    }
    return deregularize_matrix(rm);
}

std::vector<std::uint8_t> pack_indices(std::span<const VectorCode> codes, int a, int b) {
    if (a < 1 || b < 0 || a + b > 48) throw validation_error("unsupported index widths");
    const std::uint64_t amask = (std::uint64_t(1) << a) - 1;
    const std::uint64_t bmask = (std::uint64_t(1) << b) - 1;
    const int width = a + b;
    std::vector<std::uint8_t> blob((codes.size() * width + 7) / 8, 0);
    std::uint64_t buf = 0;
    int held = 0;
    std::size_t at = 0;
    for (const VectorCode& c : codes) {
        if (c.dir > amask) throw validation_error("direction index exceeds bit width");
        if (std::uint64_t(c.mag) > bmask) throw validation_error("magnitude index exceeds bit width");
        buf |= (std::uint64_t(c.dir) | std::uint64_t(c.mag) << a) << held;
        held += width;
        while (held >= 8) {
            blob[at++] = std::uint8_t(buf & 0xff);
            buf >>= 8;
            held -= 8;
        }
    }
    if (held > 0) blob[at++] = std::uint8_t(buf & 0xff);
    return blob;
}

std::vector<VectorCode> unpack_indices(std::span<const std::uint8_t> blob, std::size_t count,
                                       int a, int b) {
    if (a < 1 || b < 0 || a + b > 48) throw validation_error("unsupported index widths");
    const int width = a + b;
    if (blob.size() != (count * width + 7) / 8)
        throw format_error("index blob length does not match vector count");
    const std::uint64_t amask = (std::uint64_t(1) << a) - 1;
    const std::uint64_t bmask = (std::uint64_t(1) << b) - 1;
    std::vector<VectorCode> codes(count);
    std::uint64_t buf = 0;
    int held = 0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < count; ++i) {
        while (held < width) {
            buf |= std::uint64_t(blob[at++]) << held;
            held += 8;
        }
        codes[i].dir = std::uint32_t(buf & amask);
        codes[i].mag = std::uint32_t((buf >> a) & bmask);
        buf >>= width;
        held -= width;
    }
    return codes;
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
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(out.values.size()); ++i) {
        double q = std::nearbyint(double(out.values[i]) / s);
        q = std::min(std::max(q, lo), hi);
        out.values[i] = float(q * s);
    }
    return out;
}

double bits_per_weight(int a, int b, int k) {
    if (k < 1 || a < 1 || b < 0) throw validation_error("invalid rate parameters");
    return double(a + b) / k;
}

namespace {

constexpr char kTensorMagic[4] = {'P', 'C', 'D', 'Q'};
constexpr std::uint16_t kTensorVersion = 1;

}  // namespace

std::vector<std::uint8_t> serialize_quantized_tensor(const QuantizedTensor& qt) {
    if (qt.rows == 0 || qt.cols == 0) throw validation_error("empty tensor");
    if (qt.k == 0 || qt.rows % qt.k != 0)
        throw validation_error("tensor rows not divisible by group size");
    if (qt.scales.size() != qt.cols) throw validation_error("scale count != column count");
    const std::size_t expect = (qt.vector_count() * (qt.a + qt.b) + 7) / 8;
    if (qt.blob.size() != expect) throw validation_error("index blob has wrong length");

    std::vector<std::uint8_t> out;
    out.reserve(38 + 4 * qt.scales.size() + qt.blob.size());
    for (char c : kTensorMagic) out.push_back(std::uint8_t(c));
    wire::put_u16(out, kTensorVersion);
    wire::put_u32(out, qt.rows);
    wire::put_u32(out, qt.cols);
    wire::put_u8(out, qt.k);
    wire::put_u8(out, qt.a);
    wire::put_u8(out, qt.b);
    wire::put_u8(out, qt.flags);
    wire::put_u64(out, qt.sign_seed);
    wire::put_u64(out, qt.dir_hash);
    wire::put_u64(out, qt.mag_hash);
    for (float s : qt.scales) wire::put_f32(out, s);
    out.insert(out.end(), qt.blob.begin(), qt.blob.end());
    return out;
}

QuantizedTensor parse_quantized_tensor(std::span<const std::uint8_t> bytes) {
    wire::Reader r{bytes};
    for (char c : kTensorMagic)
        if (r.u8() != std::uint8_t(c)) throw format_error("bad tensor magic");
    if (r.u16() != kTensorVersion) throw format_error("unsupported tensor version");

    QuantizedTensor qt;
    qt.rows = r.u32();
    qt.cols = r.u32();
    qt.k = r.u8();
    qt.a = r.u8();
    qt.b = r.u8();
    qt.flags = r.u8();
    qt.sign_seed = r.u64();
    qt.dir_hash = r.u64();
    qt.mag_hash = r.u64();
    if (qt.rows == 0 || qt.cols == 0) throw format_error("empty tensor");
    if (qt.k == 0 || qt.rows % qt.k != 0)
        throw format_error("tensor rows not divisible by group size");
    if (qt.a < 1 || qt.a + qt.b > 48) throw format_error("unsupported index widths");
    if (qt.flags > 1) throw format_error("unknown flag bits");
    qt.scales.resize(qt.cols);
    for (std::uint32_t c = 0; c < qt.cols; ++c) {
        qt.scales[c] = r.f32();
        if (!std::isfinite(qt.scales[c]) || qt.scales[c] <= 0.0f)
            throw format_error("column scale must be positive and finite");
    }
    const std::size_t expect = (qt.vector_count() * (qt.a + qt.b) + 7) / 8;
    if (bytes.size() - r.pos != expect) throw format_error("index blob has wrong length");
    qt.blob.assign(bytes.begin() + r.pos, bytes.end());
    return qt;
}

void save_quantized_tensor(const std::string& path, const QuantizedTensor& qt) {
    wire::atomic_write_file(path, serialize_quantized_tensor(qt));
}

QuantizedTensor load_quantized_tensor(const std::string& path) {
    std::vector<std::uint8_t> bytes = wire::read_file(path);
    return parse_quantized_tensor(bytes);
}

}  // namespace pcdvq
