// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Conditional law of variant counts given genotype, depth and per-locus read
// error rate. A read at a locus where the individual carries genotype g shows
// the minor allele with probability alpha (g=0), 1/2 (g=1) or 1-alpha (g=2);
// counts are binomial and independent within and across loci.
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "famgc/types.hpp"

namespace famgc {

// Per-locus read error rates alpha_m. The domain is capped below 0.5:
// alpha and 1-alpha are indistinguishable under the read law (they swap
// g=0 and g=2), so the lower branch is fixed as the error rate.
class ErrorRates {
  public:
    ErrorRates() = default;

    explicit ErrorRates(std::vector<double> alphas) : alphas_(std::move(alphas)) {
        for (double a : alphas_) check_alpha(a);
    }

    static void check_alpha(double a) {
        if (!(a >= 0.0 && a < 0.5))
            throw validation_error("read error rate must lie in [0, 0.5), got " +
                                   std::to_string(a));
    }

    int num_loci() const { return static_cast<int>(alphas_.size()); }
    double at(int locus) const { return alphas_[static_cast<std::size_t>(locus)]; }
    const std::vector<double>& values() const { return alphas_; }

  private:
    std::vector<double> alphas_;
};

inline double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(1025);
        for (int i = 0; i < 1025; ++i) t[static_cast<std::size_t>(i)] = std::lgamma(i + 1.0);
        return t;
    }();
    if (n < static_cast<int>(table.size())) return table[static_cast<std::size_t>(n)];
    return std::lgamma(n + 1.0);
}

// Canonicalized so that log C(n,k) and log C(n,n-k) are bitwise equal.
inline double log_binomial_coefficient(int n, int k) {
    const int k2 = k <= n - k ? k : n - k;
    return log_factorial(n) - log_factorial(k2) - log_factorial(n - k2);
}

// e * log(b) with the 0 * log(0) = 0 convention.
inline double log_pow(double base, int exponent) {
    if (exponent == 0) return 0.0;
    return static_cast<double>(exponent) * std::log(base);
}

// log Pr(y variant reads | n reads, genotype g, error rate alpha).
// Zero depth carries no information and contributes log(1) = 0.
inline double read_log_likelihood(const ReadObservation& obs, GenotypeCode g, double alpha) {
    obs.validate();
    ErrorRates::check_alpha(alpha);
    if (g > 2) throw validation_error("genotype code must be 0, 1 or 2");
    const int n = obs.depth;
    const int y = obs.variants;
    if (n == 0) return 0.0;
    const double coef = log_binomial_coefficient(n, y);
    switch (g) {
        case 0: return coef + (log_pow(alpha, y) + log_pow(1.0 - alpha, n - y));
        case 1: return coef - static_cast<double>(n) * std::numbers::ln2;
        default: return coef + (log_pow(alpha, n - y) + log_pow(1.0 - alpha, y));
    }
}

// Sum of per-locus read log-likelihoods for one individual.
inline double individual_multilocus_log_likelihood(std::span<const ReadObservation> obs,
                                                   std::span<const GenotypeCode> genotypes,
                                                   const ErrorRates& alpha) {
    if (obs.size() != genotypes.size() ||
        static_cast<int>(obs.size()) != alpha.num_loci()) {
        throw validation_error("per-locus observation, genotype and error-rate lengths disagree");
    }
    double total = 0.0;
    for (std::size_t m = 0; m < obs.size(); ++m)
        total += read_log_likelihood(obs[m], genotypes[m], alpha.at(static_cast<int>(m)));
    return total;
}

inline double log_sum_exp(std::span<const double> xs) {
    double max = -std::numeric_limits<double>::infinity();
    for (double x : xs)
        if (x > max) max = x;
    if (!std::isfinite(max)) return max;
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - max);
    return max + std::log(sum);
}

} // namespace famgc
