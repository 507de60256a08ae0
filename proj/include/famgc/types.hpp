// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Core value types shared across the library: genotype codes, haplotypes,
// diploid haplotypes and per-locus read observations.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace famgc {

// Thrown when inputs violate a documented precondition or file contract.
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an enumeration would exceed a configured size cap.
struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Minor-allele count at one SNP: 0, 1 or 2.
using GenotypeCode = std::uint8_t;

// An M-locus haplotype packed into bits: bit m set means the minor allele
// at locus m. Valid values are [0, 2^M).
using Haplotype = std::uint32_t;

inline int haplotype_allele(Haplotype h, int locus) {
    return static_cast<int>((h >> locus) & 1u);
}

// Unordered pair of haplotypes carried by one individual (first <= second;
// the model is phase-symmetric within an individual).
struct DiploidHaplotype {
    Haplotype first = 0;
    Haplotype second = 0;

    static DiploidHaplotype of(Haplotype a, Haplotype b) {
        return a <= b ? DiploidHaplotype{a, b} : DiploidHaplotype{b, a};
    }

    GenotypeCode genotype_at(int locus) const {
        return static_cast<GenotypeCode>(haplotype_allele(first, locus) +
                                         haplotype_allele(second, locus));
    }

    friend bool operator==(const DiploidHaplotype&, const DiploidHaplotype&) = default;
    friend auto operator<=>(const DiploidHaplotype&, const DiploidHaplotype&) = default;
};

// Read depth n and variant count y for one individual at one locus.
// n = 0 means the locus is unobserved for that individual.
struct ReadObservation {
    int depth = 0;
    int variants = 0;

    friend bool operator==(const ReadObservation&, const ReadObservation&) = default;

    void validate() const {
        if (depth < 0 || variants < 0 || variants > depth) {
            throw validation_error("read observation requires 0 <= variants <= depth, got depth=" +
                                   std::to_string(depth) + " variants=" + std::to_string(variants));
        }
    }
};

namespace detail {

inline constexpr double kSimplexTol = 1e-12;

template <typename Vec>
double simplex_sum_or_throw(const Vec& v, const char* what) {
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw validation_error(std::string(what) + ": entry " + std::to_string(x) +
                                   " outside [0,1]");
        }
        sum += x;
    }
    if (!(sum > 1.0 - kSimplexTol && sum < 1.0 + kSimplexTol)) {
        throw validation_error(std::string(what) + ": entries sum to " + std::to_string(sum) +
                               ", expected 1");
    }
    return sum;
}

} // namespace detail

} // namespace famgc
