#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pcdvq/analysis.hpp"
#include "pcdvq/codebooks.hpp"
#include "pcdvq/errors.hpp"
#include "pcdvq/quantizer.hpp"
#include "pcdvq/rng.hpp"
#include "pcdvq/tensor_io.hpp"
#include "pcdvq/transforms.hpp"

namespace {

using namespace pcdvq;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Report files follow the same no-partial-writes rule as the binary formats.
void atomic_write_text(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp);
        out.write(text.data(), std::streamsize(text.size()));
        if (!out) throw io_error("short write: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("cannot rename into place: " + path);
}

double scale_overhead_bpw(const QuantizedTensor& qt) {
    // Accounting convention: per-column scales count as 16 bits each.
    return 16.0 / qt.rows;
}

// %.12g, but integral values keep one decimal ("2.0", not "2").
std::string fmt_rate(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    std::string s = buf;
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

// Mean per-group error split between a weight matrix and its reconstruction,
// over the same contiguous k-groups the quantizer uses (column-major).
ErrorBreakdown mean_group_breakdown(const WeightMatrix& w, const WeightMatrix& wh, int k,
                                    double* max_identity_gap) {
    if (w.rows != wh.rows || w.cols != wh.cols)
        throw validation_error("compare: tensor shapes differ");
    if (w.rows % std::uint32_t(k) != 0)
        throw validation_error("compare: rows not divisible by group size");
    const std::size_t groups = std::size_t(w.rows) * w.cols / std::size_t(k);
    const std::size_t gpc = w.rows / std::uint32_t(k);
    std::vector<double> v(k), vh(k);
    ErrorBreakdown sum;
    double gap = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t col = g / gpc;
        const std::size_t row = g % gpc * std::size_t(k);
        for (int d = 0; d < k; ++d) {
            v[d] = w.at(std::uint32_t(row + std::size_t(d)), std::uint32_t(col));
            vh[d] = wh.at(std::uint32_t(row + std::size_t(d)), std::uint32_t(col));
        }
        ErrorBreakdown e = mse_decompose(v, vh);
        sum.total_mse += e.total_mse;
        sum.direction_mse += e.direction_mse;
        sum.magnitude_mse += e.magnitude_mse;
        gap = std::max(gap, std::fabs(e.direction_mse + e.magnitude_mse - e.total_mse));
    }
    sum.total_mse /= double(groups);
    sum.direction_mse /= double(groups);
    sum.magnitude_mse /= double(groups);
    if (max_identity_gap) *max_identity_gap = gap;
    return sum;
}

void print_breakdown(const char* label, const ErrorBreakdown& e) {
    std::printf("%s: total %.12g  direction %.12g  magnitude %.12g\n", label, e.total_mse,
                e.direction_mse, e.magnitude_mse);
}

struct BuildArgs {
    int a = 14;
    int b = 2;
    int k = 8;
    double tau = 0.9999;
    double tol = 1e-6;
    int max_iters = 200;
    std::uint64_t seed = 42;
    std::size_t pool = 0;  // 0: direction_pool_target(a)
    std::string dir_path;
    std::string mag_path;
};

int cmd_build_codebooks(const BuildArgs& args) {
    const std::size_t pool_target =
        args.pool ? args.pool : direction_pool_target(std::min(args.a, 40));
    DirectionPool pool = enumerate_e8_directions(pool_target);
    DirectionCodebook dir = greedy_direction_codebook(pool, args.a, args.seed);
    MagnitudeCodebook mag =
        lloyd_max_magnitude_codebook(args.b, args.k, args.tau, args.tol, args.max_iters);

    std::printf("direction: entries %zu  dim %d  pool %zu  shells %d  seed %llu  hash %016llx\n",
                dir.size(), dir.dim, std::size_t(dir.provenance.pool_size),
                dir.provenance.shells_used, (unsigned long long)dir.provenance.seed,
                (unsigned long long)codebook_hash(dir));
    std::printf(
        "magnitude: entries %zu  k %d  tau %.6g  iterations %d  converged %s  "
        "final_movement %.12g  hash %016llx\n",
        mag.entries.size(), mag.k, mag.tau, mag.iterations, mag.converged ? "yes" : "no",
        mag.final_movement, (unsigned long long)codebook_hash(mag));

    save_codebook(args.dir_path, dir);
    std::printf("wrote: %s\n", args.dir_path.c_str());
    save_codebook(args.mag_path, mag);
    std::printf("wrote: %s\n", args.mag_path.c_str());
    return 0;
}

struct QuantizeArgs {
    std::string in_path;
    std::string out_path;
    std::string dir_path;
    std::string mag_path;
    std::uint64_t seed = 1;
};

int cmd_quantize(const QuantizeArgs& args) {
    const WeightMatrix w = load_tensor(args.in_path);
    const DirectionCodebook dir = load_direction_codebook(args.dir_path);
    const MagnitudeCodebook mag = load_magnitude_codebook(args.mag_path);

    QuantConfig cfg;
    cfg.k = dir.dim;
    cfg.a = dir.bits;
    cfg.b = mag.bits;
    cfg.tau = mag.tau;
    cfg.sign_seed = args.seed;
    cfg.dir_hash = codebook_hash(dir);
    cfg.mag_hash = codebook_hash(mag);

    const QuantizedTensor qt = quantize_tensor(w, cfg, dir, mag);
    std::printf("tensor: %u x %u  k %d  a %d  b %d  sign_seed %llu\n", w.rows, w.cols, cfg.k,
                cfg.a, cfg.b, (unsigned long long)args.seed);
    const double bpw = bits_per_weight(cfg.a, cfg.b, cfg.k);
    std::printf("bpw: %s pure  %s with f16 column scales\n", fmt_rate(bpw).c_str(),
                fmt_rate(bpw + scale_overhead_bpw(qt)).c_str());

    // Reconstruction error against the input, split per column-major k-group.
    const WeightMatrix wh = dequantize_tensor(qt, dir, mag);
    double gap = 0.0;
    ErrorBreakdown mean = mean_group_breakdown(w, wh, cfg.k, &gap);
    print_breakdown("error", mean);
    std::printf("identity_gap_max: %.6g\n", gap);
    if (qt.flags & 1) std::printf("note: tensor contains all-zero groups\n");

    save_quantized_tensor(args.out_path, qt);
    std::printf("wrote: %s\n", args.out_path.c_str());
    return 0;
}

struct DequantizeArgs {
    std::string in_path;
    std::string out_path;
    std::string dir_path;
    std::string mag_path;
    std::string compare_path;
};

int cmd_dequantize(const DequantizeArgs& args) {
    const QuantizedTensor qt = load_quantized_tensor(args.in_path);
    const DirectionCodebook dir = load_direction_codebook(args.dir_path);
    const MagnitudeCodebook mag = load_magnitude_codebook(args.mag_path);

    const WeightMatrix w = dequantize_tensor(qt, dir, mag);
    std::printf("tensor: %u x %u  k %d  a %d  b %d  sign_seed %llu\n", w.rows, w.cols,
                int(qt.k), int(qt.a), int(qt.b), (unsigned long long)qt.sign_seed);

    if (!args.compare_path.empty()) {
        const WeightMatrix orig = load_tensor(args.compare_path);
        double gap = 0.0;
        ErrorBreakdown mean = mean_group_breakdown(orig, w, qt.k, &gap);
        print_breakdown("compare", mean);
        std::printf("identity_gap_max: %.6g\n", gap);
    }

    save_tensor(args.out_path, w);
    std::printf("wrote: %s\n", args.out_path.c_str());
    return 0;
}

struct AnalyzeArgs {
    std::size_t samples = 20000;
    std::uint64_t seed = 7;
    int k = 8;
    std::vector<int> bit_grid = {4, 6, 8, 10};
    std::vector<int> dim_grid = {2, 4, 8, 16};
    int dim_bits = 10;
    int total_bits = 12;
    std::string out_path;
};

int cmd_analyze(const AnalyzeArgs& args) {
    std::string report;
    char head[160];
    std::snprintf(head, sizeof head, "samples: %zu\nseed: %llu\n", args.samples,
                  (unsigned long long)args.seed);
    report += head;

    report += "\n# direction-only vs magnitude-only quantization by bit budget\n";
    report += render_sensitivity_table(
        sensitivity_bits_experiment(args.samples, args.k, args.bit_grid, args.seed));

    std::snprintf(head, sizeof head,
                  "\n# coupled %d-bit K-means error split by group dimension\n", args.dim_bits);
    report += head;
    report += render_sensitivity_table(
        sensitivity_dimension_experiment(args.samples, args.dim_grid, args.dim_bits, args.seed));

    report += "\n# decoupled vs coupled at equal total bits\n";
    report += render_comparison_table(
        compare_decoupled_vs_coupled(args.samples, args.k, args.total_bits, args.seed));

    std::fputs(report.c_str(), stdout);
    if (!args.out_path.empty()) {
        atomic_write_text(args.out_path, report);
        std::printf("wrote: %s\n", args.out_path.c_str());
    }
    return 0;
}

struct BenchArgs {
    std::uint32_t rows = 4096;
    std::uint32_t cols = 4096;
    int a = 14;
    int b = 2;
    int k = 8;
    double tau = 0.9999;
    std::uint64_t seed = 42;       // codebook construction
    std::uint64_t sign_seed = 1;   // pipeline
    std::uint64_t data_seed = 11;  // synthetic tensor
};

int cmd_bench(const BenchArgs& args) {
    std::printf("rows: %u\ncols: %u\nk: %d\na: %d\nb: %d\n", args.rows, args.cols, args.k,
                args.a, args.b);

    clock_type::time_point t0 = clock_type::now();
    DirectionPool pool = enumerate_e8_directions(direction_pool_target(std::min(args.a, 40)));
    const DirectionCodebook dir = greedy_direction_codebook(pool, args.a, args.seed);
    const MagnitudeCodebook mag = lloyd_max_magnitude_codebook(args.b, args.k, args.tau);
    std::printf("codebook_build_s: %.3f\n", seconds_since(t0));

    WeightMatrix w;
    w.rows = args.rows;
    w.cols = args.cols;
    w.values.resize(std::size_t(args.rows) * args.cols);
    for (std::size_t i = 0; i < w.values.size(); i += 2) {
        GaussianPair z = gaussian_pair(args.data_seed, i / 2);
        w.values[i] = float(z.z0);
        if (i + 1 < w.values.size()) w.values[i + 1] = float(z.z1);
    }

    t0 = clock_type::now();
    RegularizedMatrix rm = regularize_matrix(w, args.sign_seed);
    std::printf("regularize_s: %.3f\n", seconds_since(t0));

    QuantConfig cfg;
    cfg.k = args.k;
    cfg.a = args.a;
    cfg.b = args.b;
    cfg.tau = args.tau;
    cfg.sign_seed = args.sign_seed;

    t0 = clock_type::now();
    const QuantizedTensor qt = quantize_tensor(w, cfg, dir, mag);
    std::printf("quantize_s: %.3f\n", seconds_since(t0));

    t0 = clock_type::now();
    const WeightMatrix back = dequantize_tensor(qt, dir, mag);
    std::printf("dequantize_s: %.3f\n", seconds_since(t0));
    if (back.values.empty()) return 2;  // unreachable; keeps the reconstruction live

    const double bpw = bits_per_weight(args.a, args.b, args.k);
    const double bpw_s = bpw + scale_overhead_bpw(qt);
    std::printf("bpw: %s pure  %s with f16 column scales\n", fmt_rate(bpw).c_str(),
                fmt_rate(bpw_s).c_str());
    std::printf("compression_vs_fp16: %s pure  %s with scales\n", fmt_rate(16.0 / bpw).c_str(),
                fmt_rate(16.0 / bpw_s).c_str());
    std::printf("compression_vs_fp32: %s pure  %s with scales\n", fmt_rate(32.0 / bpw).c_str(),
                fmt_rate(32.0 / bpw_s).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polar-decoupled vector quantization pipeline"};
    app.require_subcommand(1);

    BuildArgs build;
    CLI::App* cb = app.add_subcommand("build-codebooks", "Construct direction and magnitude codebooks");
    cb->add_option("--a", build.a, "Direction bits");
    cb->add_option("--b", build.b, "Magnitude bits");
    cb->add_option("--k", build.k, "Group dimension");
    cb->add_option("--tau", build.tau, "Radius-law truncation quantile");
    cb->add_option("--tol", build.tol, "Lloyd-Max movement tolerance");
    cb->add_option("--max-iters", build.max_iters, "Lloyd-Max iteration cap");
    cb->add_option("--seed", build.seed, "Greedy selection seed");
    cb->add_option("--pool", build.pool, "Direction pool size (0: 16*2^a)");
    cb->add_option("--dir-codebook", build.dir_path, "Output direction codebook")->required();
    cb->add_option("--mag-codebook", build.mag_path, "Output magnitude codebook")->required();

    QuantizeArgs quant;
    CLI::App* qc = app.add_subcommand("quantize", "Quantize a raw f32 tensor");
    qc->add_option("--in", quant.in_path, "Input tensor (raw f32 + .meta sidecar)")->required();
    qc->add_option("--out", quant.out_path, "Output quantized tensor")->required();
    qc->add_option("--dir-codebook", quant.dir_path, "Direction codebook")->required();
    qc->add_option("--mag-codebook", quant.mag_path, "Magnitude codebook")->required();
    qc->add_option("--seed", quant.seed, "Sign-flip seed");

    DequantizeArgs dequant;
    CLI::App* dc = app.add_subcommand("dequantize", "Reconstruct a tensor from its quantized form");
    dc->add_option("--in", dequant.in_path, "Input quantized tensor")->required();
    dc->add_option("--out", dequant.out_path, "Output tensor (raw f32 + .meta sidecar)")->required();
    dc->add_option("--dir-codebook", dequant.dir_path, "Direction codebook")->required();
    dc->add_option("--mag-codebook", dequant.mag_path, "Magnitude codebook")->required();
    dc->add_option("--compare", dequant.compare_path, "Original tensor to report errors against");

    AnalyzeArgs ana;
    CLI::App* ac = app.add_subcommand("analyze", "Synthetic-data error experiments");
    ac->add_option("--samples", ana.samples, "Sample count per experiment");
    ac->add_option("--seed", ana.seed, "Experiment seed");
    ac->add_option("--k", ana.k, "Group dimension");
    ac->add_option("--grid", ana.bit_grid, "Bit grid for the sensitivity experiment")
        ->delimiter(',');
    ac->add_option("--dims", ana.dim_grid, "Dimension grid for the coupled experiment")
        ->delimiter(',');
    ac->add_option("--dim-bits", ana.dim_bits, "Coupled bits for the dimension experiment");
    ac->add_option("--total-bits", ana.total_bits, "Total bits for the comparison");
    ac->add_option("--out", ana.out_path, "Write the report to this file as well");

    BenchArgs bench;
    CLI::App* bc = app.add_subcommand("bench", "Time the pipeline on a synthetic tensor");
    bc->add_option("--rows", bench.rows, "Tensor rows");
    bc->add_option("--cols", bench.cols, "Tensor cols");
    bc->add_option("--a", bench.a, "Direction bits");
    bc->add_option("--b", bench.b, "Magnitude bits");
    bc->add_option("--k", bench.k, "Group dimension");
    bc->add_option("--tau", bench.tau, "Radius-law truncation quantile");
    bc->add_option("--seed", bench.seed, "Codebook construction seed");
    bc->add_option("--sign-seed", bench.sign_seed, "Sign-flip seed");
    bc->add_option("--data-seed", bench.data_seed, "Synthetic tensor seed");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(cb)) return cmd_build_codebooks(build);
        if (app.got_subcommand(qc)) return cmd_quantize(quant);
        if (app.got_subcommand(dc)) return cmd_dequantize(dequant);
        if (app.got_subcommand(ac)) return cmd_analyze(ana);
        if (app.got_subcommand(bc)) return cmd_bench(bench);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const codebook_mismatch_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const format_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    } catch (const validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
