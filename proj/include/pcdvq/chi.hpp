#pragma once

namespace pcdvq {

// Regularized lower incomplete gamma P(s, z), s > 0, z >= 0. Series below
// z = s + 1, Lentz continued fraction above; absolute error well under 1e-12.
double regularized_gamma_p(double s, double z);

// Chi distribution with k degrees of freedom: the law of ||g|| for g ~ N(0, I_k).
struct ChiDistribution {
    int k;

    explicit ChiDistribution(int k_);

    double pdf(double r) const;
    double cdf(double r) const;

    // Inverse cdf for p in [0, 1). Bisection to 1e-12, two Newton polish steps.
    double quantile(double p) const;

    // Integral of t * pdf(t) over [lo, hi]; hi may be +infinity.
    double partial_expectation(double lo, double hi) const;

    double mean() const;
};

}  // namespace pcdvq
