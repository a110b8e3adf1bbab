#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pcdvq/codebooks.hpp"
#include "pcdvq/parallel.hpp"
#include "pcdvq/quantizer.hpp"
#include "pcdvq/reference.hpp"
#include "pcdvq/rng.hpp"
#include "pcdvq/transforms.hpp"

// Production (OpenMP) kernels against their serial reference twins. The twins
// are the correctness baseline, so the interesting number is the ratio.

namespace {

using namespace pcdvq;

WeightMatrix gaussian_matrix(std::uint32_t rows, std::uint32_t cols, std::uint64_t seed) {
    WeightMatrix w;
    w.rows = rows;
    w.cols = cols;
    w.values.resize(std::size_t(rows) * cols);
    for (std::size_t i = 0; i < w.values.size(); i += 2) {
        GaussianPair z = gaussian_pair(seed, i / 2);
        w.values[i] = float(z.z0);
        if (i + 1 < w.values.size()) w.values[i + 1] = float(z.z1);
    }
    return w;
}

struct Fixture {
    WeightMatrix w = gaussian_matrix(1024, 512, 2024);
    DirectionCodebook dir;
    MagnitudeCodebook mag = lloyd_max_magnitude_codebook(2, 8, 0.9999);
    QuantConfig cfg;
    QuantizedTensor qt;

    Fixture() {
        DirectionPool pool = enumerate_e8_directions(std::size_t(4) << 10);
        dir = greedy_direction_codebook(pool, 10, 42);
        cfg.a = 10;
        cfg.sign_seed = 7;
        qt = quantize_tensor(w, cfg, dir, mag);
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

void bm_regularize_omp(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(regularize_matrix(f.w, 7));
}

void bm_regularize_serial(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(reference::regularize_matrix(f.w, 7));
}

void bm_quantize_omp(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(quantize_tensor(f.w, f.cfg, f.dir, f.mag));
}

void bm_quantize_serial(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::quantize_tensor(f.w, f.cfg, f.dir, f.mag));
}

void bm_dequantize_omp(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(dequantize_tensor(f.qt, f.dir, f.mag));
}

void bm_dequantize_serial(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::dequantize_tensor(f.qt, f.dir, f.mag));
}

void bm_scalar_quantize_omp(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(scalar_quantize(f.w, 4));
}

void bm_scalar_quantize_serial(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(reference::scalar_quantize(f.w, 4));
}

void bm_kmeans_omp(benchmark::State& state) {
    std::vector<double> data(20000 * 8);
    for (std::size_t i = 0; i < data.size(); i += 2) {
        GaussianPair z = gaussian_pair(5, i / 2);
        data[i] = z.z0;
        data[i + 1] = z.z1;
    }
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_codebook(data, 8, 6, 10, 3));
}

BENCHMARK(bm_regularize_omp);
BENCHMARK(bm_regularize_serial);
BENCHMARK(bm_quantize_omp);
BENCHMARK(bm_quantize_serial);
BENCHMARK(bm_dequantize_omp);
BENCHMARK(bm_dequantize_serial);
BENCHMARK(bm_scalar_quantize_omp);
BENCHMARK(bm_scalar_quantize_serial);
BENCHMARK(bm_kmeans_omp);

}  // namespace

BENCHMARK_MAIN();
