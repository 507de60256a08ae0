// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random streams with counter-based derivation. Every randomized
// component draws from a stream derived from (root seed, path of indices),
// so replications and families can be generated in any thread order while
// staying byte-reproducible. All sampling is hand-rolled on top of
// mt19937_64 raw output; no std::*_distribution is used anywhere.
#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "famgc/types.hpp"

namespace famgc {

// splitmix64 finalizer; good avalanche for seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

    // Derives an independent substream from a root seed and an index path,
    // e.g. derive(seed, {replication, family}).
    static RandomStream derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
        std::uint64_t h = mix64(root);
        for (std::uint64_t x : path) h = mix64(h ^ mix64(x));
        RandomStream s(0);
        s.engine_.seed(h);
        return s;
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        assert(n > 0);
        const std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Binomial by explicit Bernoulli trials; depths here are small.
    int binomial(int n, double p) {
        int k = 0;
        for (int i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
        return k;
    }

    // Knuth product-of-uniforms method, splitting large means so the
    // running product stays well above the denormal range.
    int poisson(double mu) {
        assert(mu >= 0.0);
        int total = 0;
        while (mu > 60.0) {
            const double half = mu / 2.0;
            total += poisson_small(half);
            mu -= half;
        }
        return total + poisson_small(mu);
    }

    // Positive (zero-truncated) Poisson: resample until >= 1.
    int zero_truncated_poisson(double mu) {
        assert(mu > 0.0);
        for (;;) {
            const int k = poisson(mu);
            if (k > 0) return k;
        }
    }

    // Index draw from an explicit probability vector by CDF inversion.
    int categorical(const std::vector<double>& probs) {
        const double u = uniform01();
        double cum = 0.0;
        int last_nonzero = -1;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) last_nonzero = static_cast<int>(i);
            cum += probs[i];
            if (u < cum) return static_cast<int>(i);
        }
        if (last_nonzero < 0)
            throw validation_error("categorical draw from an all-zero probability vector");
        return last_nonzero;
    }

  private:
    int poisson_small(double mu) {
        if (mu <= 0.0) return 0;
        const double limit = std::exp(-mu);
        int k = 0;
        double prod = 1.0;
        do {
            ++k;
            prod *= uniform01();
        } while (prod > limit);
        return k - 1;
    }

    std::mt19937_64 engine_;
};

} // namespace famgc
