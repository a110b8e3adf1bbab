#include "pcdvq/tensor_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string_view>

#include "pcdvq/errors.hpp"
#include "wire.hpp"

namespace pcdvq {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::uint32_t parse_dim(std::string_view value, const char* key) {
    value = trim(value);
    std::uint32_t n = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
    if (ec != std::errc{} || ptr != value.data() + value.size() || n == 0)
        throw format_error(std::string("sidecar: bad value for ") + key);
    return n;
}

}  // namespace

WeightMatrix load_tensor(const std::string& path) {
    std::vector<std::uint8_t> meta = wire::read_file(path + ".meta");
    std::string_view text(reinterpret_cast<const char*>(meta.data()), meta.size());

    std::uint32_t rows = 0, cols = 0;
    while (!text.empty()) {
        std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) throw format_error("sidecar: expected key: value lines");
        std::string_view key = trim(line.substr(0, colon));
        std::string_view value = line.substr(colon + 1);
        if (key == "rows")
            rows = parse_dim(value, "rows");
        else if (key == "cols")
            cols = parse_dim(value, "cols");
        else
            throw format_error("sidecar: unknown key '" + std::string(key) + "'");
    }
    if (rows == 0 || cols == 0) throw format_error("sidecar: rows and cols are required");

    std::vector<std::uint8_t> raw = wire::read_file(path);
    const std::size_t total = std::size_t(rows) * cols;
    if (raw.size() != total * 4)
        throw format_error("tensor file size does not match sidecar shape");

    WeightMatrix w;
    w.rows = rows;
    w.cols = cols;
    w.values.resize(total);
    wire::Reader r{raw};
    for (std::size_t i = 0; i < total; ++i) {
        w.values[i] = r.f32();
        if (!std::isfinite(w.values[i])) throw format_error("tensor has non-finite values");
    }
    return w;
}

void save_tensor(const std::string& path, const WeightMatrix& w) {
    if (w.rows == 0 || w.cols == 0 || w.values.size() != std::size_t(w.rows) * w.cols)
        throw validation_error("matrix shape does not match value count");
    std::vector<std::uint8_t> raw;
    raw.reserve(w.values.size() * 4);
    for (float v : w.values) wire::put_f32(raw, v);
    wire::atomic_write_file(path, raw);

    std::string meta = "rows: " + std::to_string(w.rows) + "\ncols: " + std::to_string(w.cols) + "\n";
    std::vector<std::uint8_t> mb(meta.begin(), meta.end());
    wire::atomic_write_file(path + ".meta", mb);
}

}  // namespace pcdvq
