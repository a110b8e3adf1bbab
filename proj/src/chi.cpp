#include "pcdvq/chi.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "pcdvq/errors.hpp"

namespace pcdvq {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 500;

double gamma_p_series(double s, double z) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= z / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-z + s * std::log(z) - std::lgamma(s));
}

// Lentz evaluation of the continued fraction for Q(s, z).
double gamma_q_fraction(double s, double z) {
    double b = z + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return std::exp(-z + s * std::log(z) - std::lgamma(s)) * h;
}

}  // namespace

double regularized_gamma_p(double s, double z) {
    if (!(s > 0.0) || std::isnan(z) || z < 0.0)
        throw validation_error("regularized_gamma_p: need s > 0, z >= 0");
    if (z == 0.0) return 0.0;
    if (std::isinf(z)) return 1.0;
    if (z < s + 1.0) return gamma_p_series(s, z);
    return 1.0 - gamma_q_fraction(s, z);
}

ChiDistribution::ChiDistribution(int k_) : k(k_) {
    if (k < 1) throw validation_error("chi: k must be >= 1");
}

double ChiDistribution::pdf(double r) const {
    if (std::isnan(r) || r < 0.0) throw validation_error("chi pdf: r must be >= 0");
    if (std::isinf(r)) return 0.0;
    if (r == 0.0)
        return k == 1 ? std::sqrt(2.0 / std::numbers::pi) : 0.0;
    const double log_pdf = (1.0 - 0.5 * k) * std::numbers::ln2 - std::lgamma(0.5 * k) +
                           (k - 1) * std::log(r) - 0.5 * r * r;
    return std::exp(log_pdf);
}

double ChiDistribution::cdf(double r) const {
    if (std::isnan(r) || r < 0.0) throw validation_error("chi cdf: r must be >= 0");
    if (std::isinf(r)) return 1.0;
    return regularized_gamma_p(0.5 * k, 0.5 * r * r);
}

double ChiDistribution::quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0))
        throw validation_error("chi quantile: p must lie in [0, 1)");
    if (p == 0.0) return 0.0;

    double lo = 0.0, hi = 64.0;
    while (cdf(hi) < p) {
        hi *= 2.0;
        if (hi > 0x1p20) throw validation_error("chi quantile: bracket blew up");
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;  // hit f64 resolution
        if (cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 2; ++i) {
        const double d = pdf(x);
        if (d <= 0.0) break;
        const double step = (cdf(x) - p) / d;
        const double next = x - step;
        if (next > lo && next < hi) x = next;
    }
    return x;
}

double ChiDistribution::mean() const {
    return std::numbers::sqrt2 * std::exp(std::lgamma(0.5 * (k + 1)) - std::lgamma(0.5 * k));
}

double ChiDistribution::partial_expectation(double lo, double hi) const {
    if (std::isnan(lo) || std::isnan(hi) || lo < 0.0 || hi < lo)
        throw validation_error("chi partial_expectation: need 0 <= lo <= hi");
    const double s = 0.5 * (k + 1);
    const double upper = std::isinf(hi) ? 1.0 : regularized_gamma_p(s, 0.5 * hi * hi);
    const double lower = regularized_gamma_p(s, 0.5 * lo * lo);
    return mean() * (upper - lower);
}

}  // namespace pcdvq
