// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "famgc/rng.hpp"

using namespace famgc;

TEST_CASE("streams are reproducible and path-dependent") {
    RandomStream a = RandomStream::derive(42, {1, 2});
    RandomStream b = RandomStream::derive(42, {1, 2});
    RandomStream c = RandomStream::derive(42, {2, 1});
    std::vector<std::uint64_t> xs, ys, zs;
    for (int i = 0; i < 16; ++i) {
        xs.push_back(a.next_u64());
        ys.push_back(b.next_u64());
        zs.push_back(c.next_u64());
    }
    CHECK(xs == ys);
    CHECK(xs != zs);
}

TEST_CASE("uniform01 stays in range") {
    RandomStream rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_below covers its support uniformly") {
    RandomStream rng(2);
    std::vector<int> counts(7, 0);
    const int trials = 70000;
    for (int i = 0; i < trials; ++i) ++counts[rng.uniform_below(7)];
    for (int v : counts) CHECK(std::abs(v - trials / 7) < 5 * std::sqrt(trials / 7.0));
}

TEST_CASE("binomial moments") {
    RandomStream rng(3);
    const int trials = 50000;
    double sum = 0.0;
    for (int i = 0; i < trials; ++i) sum += rng.binomial(20, 0.3);
    const double se = std::sqrt(20 * 0.3 * 0.7 / trials);
    CHECK(std::abs(sum / trials - 6.0) < 4 * se);
}

TEST_CASE("poisson moments for small and split means") {
    RandomStream rng(4);
    for (double mu : {3.0, 30.0, 90.0}) {
        const int trials = 40000;
        double sum = 0.0;
        for (int i = 0; i < trials; ++i) sum += rng.poisson(mu);
        const double se = std::sqrt(mu / trials);
        CHECK(std::abs(sum / trials - mu) < 4 * se);
    }
}

TEST_CASE("categorical respects probabilities and rejects empty mass") {
    RandomStream rng(5);
    const std::vector<double> probs{0.5, 0.0, 0.3, 0.2};
    std::vector<int> counts(4, 0);
    const int trials = 60000;
    for (int i = 0; i < trials; ++i) ++counts[static_cast<std::size_t>(rng.categorical(probs))];
    CHECK(counts[1] == 0);
    for (int k : {0, 2, 3}) {
        const double se = std::sqrt(probs[static_cast<std::size_t>(k)] *
                                    (1 - probs[static_cast<std::size_t>(k)]) / trials);
        CHECK(std::abs(counts[static_cast<std::size_t>(k)] / static_cast<double>(trials) -
                       probs[static_cast<std::size_t>(k)]) < 4 * se + 1e-9);
    }
    CHECK_THROWS_AS(rng.categorical({0.0, 0.0}), validation_error);
}
