// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <map>

#include "famgc/pedigree_prior.hpp"
#include "famgc/rng.hpp"
#include "support/oracles.hpp"

using namespace famgc;

TEST_CASE("singleton has one configuration with two distinct alleles") {
    const IccDistribution dist = icc_distribution(Relationship::singleton());
    REQUIRE(dist.entries.size() == 1);
    CHECK(dist.entries[0].first.num_distinct == 2);
    CHECK(dist.entries[0].second == 1.0);
}

TEST_CASE("pair sharing weights match the meiosis oracle") {
    RandomStream rng(20240917);
    const int trials = 1'000'000;
    const auto sib = oracles::sib_ibd_sharing(rng, trials);
    const auto cousin = oracles::cousin_ibd_sharing(rng, trials);

    const std::array<double, 3> sib_expected{0.25, 0.50, 0.25};
    const std::array<double, 3> cousin_expected{0.75, 0.25, 0.0};
    for (int phi = 0; phi <= 2; ++phi) {
        const double se_sib = std::sqrt(sib_expected[phi] * (1 - sib_expected[phi]) / trials);
        CHECK(std::abs(sib[phi] - sib_expected[phi]) <= 3 * se_sib + 1e-12);
        const double se_c = std::sqrt(cousin_expected[phi] * (1 - cousin_expected[phi]) / trials);
        CHECK(std::abs(cousin[phi] - cousin_expected[phi]) <= 3 * se_c + 1e-12);
    }

    const IccDistribution sib_dist = icc_distribution(Relationship::sib_pair());
    CHECK(sib_dist.entries[0].second == 0.25);
    CHECK(sib_dist.entries[1].second == 0.50);
    CHECK(sib_dist.entries[2].second == 0.25);
    const IccDistribution cousin_dist = icc_distribution(Relationship::cousin_pair());
    CHECK(cousin_dist.entries[0].second == 0.75);
    CHECK(cousin_dist.entries[1].second == 0.25);
    CHECK(cousin_dist.entries[2].second == 0.0);
    // sharing 0/1/2 alleles leaves 4/3/2 distinct classes
    CHECK(sib_dist.entries[0].first.num_distinct == 4);
    CHECK(sib_dist.entries[1].first.num_distinct == 3);
    CHECK(sib_dist.entries[2].first.num_distinct == 2);
}

TEST_CASE("trio transmission configurations") {
    const IccDistribution dist = icc_distribution(Relationship::trio());
    REQUIRE(dist.entries.size() == 4);
    for (const auto& [cfg, prob] : dist.entries) {
        CHECK(prob == 0.25);
        CHECK(cfg.num_distinct == 4); // four parental alleles stay distinct
        CHECK(cfg.num_members() == 3);
        // child slots reuse one class from each parent
        CHECK(cfg.slot_class[4] < 2);
        CHECK(cfg.slot_class[5] >= 2);
        CHECK(cfg.slot_class[5] < 4);
    }
}

TEST_CASE("invalid sharing probabilities are rejected") {
    CHECK_THROWS_AS(Relationship::relative_pair(0.5, 0.6, 0.2), validation_error);
    CHECK_THROWS_AS(Relationship::relative_pair(-0.1, 0.9, 0.2), validation_error);
}

TEST_CASE("ordered pair prior columns sum to one over the nine ordered cells") {
    RandomStream rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const double p = 0.001 + 0.998 * rng.uniform01();
        for (int phi = 0; phi <= 2; ++phi) {
            double sum = 0.0;
            for (GenotypeCode g1 = 0; g1 <= 2; ++g1)
                for (GenotypeCode g2 = 0; g2 <= 2; ++g2)
                    sum += pair_genotype_prior(g1, g2, phi, p);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("pair prior reproduces the published row values") {
    RandomStream rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const double p = 0.01 + 0.98 * rng.uniform01();
        for (int phi = 0; phi <= 2; ++phi)
            for (GenotypeCode g1 = 0; g1 <= 2; ++g1)
                for (GenotypeCode g2 = 0; g2 <= 2; ++g2) {
                    const double row = oracles::pair_prior_row(g1, g2, phi, p);
                    const double cells =
                        g1 == g2 ? pair_genotype_prior(g1, g2, phi, p)
                                 : pair_genotype_prior(g1, g2, phi, p) +
                                       pair_genotype_prior(g2, g1, phi, p);
                    CHECK(cells == doctest::Approx(row).epsilon(1e-12));
                }
    }
    // spot values: the (0,1)/(1,0) row at phi=1, p=0.1 is 2pq^2 = 0.162
    CHECK(pair_genotype_prior(0, 1, 1, 0.1) + pair_genotype_prior(1, 0, 1, 0.1) ==
          doctest::Approx(0.162).epsilon(1e-12));
    // opposite homozygotes cannot share two alleles IBD
    CHECK(pair_genotype_prior(0, 2, 2, 0.37) == 0.0);
    // identical heterozygotes sharing both alleles: 2pq
    CHECK(pair_genotype_prior(1, 1, 2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
}

namespace {

double stream_total(const Relationship& rel, const FounderFrequencies& founders) {
    double total = 0.0;
    for_each_family_configuration(rel, founders, {}, [&](const FamilyConfiguration& fc) {
        total += fc.weight;
    });
    return total;
}

std::map<GenotypeMatrix, double> genotype_distribution(const Relationship& rel,
                                                       const FounderFrequencies& founders) {
    std::map<GenotypeMatrix, double> dist;
    for_each_family_configuration(rel, founders, {}, [&](const FamilyConfiguration& fc) {
        dist[genotypes_of(fc.member_diplotypes, founders.num_loci())] += fc.weight;
    });
    return dist;
}

} // namespace

TEST_CASE("configuration stream weights sum to one for every relationship and region size") {
    const std::vector<Relationship> rels{
        Relationship::singleton(),       Relationship::sib_pair(),
        Relationship::cousin_pair(),     Relationship::trio(),
        Relationship::relative_pair(1, 0, 0),
        Relationship::custom(nuclear_family_icc(2), "nuclear:2")};
    for (const auto& rel : rels)
        for (int m = 1; m <= 3; ++m) {
            std::vector<double> mafs;
            for (int i = 0; i < m; ++i) mafs.push_back(0.1 + 0.15 * i);
            CHECK(stream_total(rel, FounderFrequencies::independent_mafs(mafs)) ==
                  doctest::Approx(1.0).epsilon(1e-9));
        }
}

TEST_CASE("singleton enumeration reproduces Hardy-Weinberg") {
    const auto dist = genotype_distribution(Relationship::singleton(),
                                            FounderFrequencies::from_maf(0.3));
    CHECK(dist.at({0}) == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(dist.at({1}) == doctest::Approx(0.42).epsilon(1e-12));
    CHECK(dist.at({2}) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("sib marginals equal the singleton prior") {
    for (double p : {0.07, 0.2, 0.45}) {
        const auto dist =
            genotype_distribution(Relationship::sib_pair(), FounderFrequencies::from_maf(p));
        for (GenotypeCode g1 = 0; g1 <= 2; ++g1) {
            double marginal = 0.0;
            for (GenotypeCode g2 = 0; g2 <= 2; ++g2) {
                const auto it = dist.find({g1, g2});
                if (it != dist.end()) marginal += it->second;
            }
            CHECK(marginal ==
                  doctest::Approx(static_cast<double>(oracles::hardy_weinberg(g1, p)))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("trio enumeration obeys Mendelian transmission") {
    const auto dist =
        genotype_distribution(Relationship::trio(), FounderFrequencies::from_maf(0.25));
    // Pr(child = 2 | both parents heterozygous) = 1/4
    double both_het = 0.0, child2 = 0.0;
    for (GenotypeCode gc = 0; gc <= 2; ++gc) {
        const auto it = dist.find({1, 1, gc});
        if (it == dist.end()) continue;
        both_het += it->second;
        if (gc == 2) child2 = it->second;
    }
    CHECK(child2 / both_het == doctest::Approx(0.25).epsilon(1e-10));
    // impossible transmissions carry no mass
    CHECK(dist.find({0, 0, 1}) == dist.end());
    CHECK(dist.find({2, 2, 0}) == dist.end());
}

TEST_CASE("family prior factorizes for independent pairs") {
    const FounderFrequencies founders = FounderFrequencies::from_maf(0.3);
    const Relationship unrelated = Relationship::relative_pair(1, 0, 0);
    for (GenotypeCode g1 = 0; g1 <= 2; ++g1)
        for (GenotypeCode g2 = 0; g2 <= 2; ++g2) {
            const double joint = family_genotype_prior({g1, g2}, unrelated, founders);
            const double product =
                family_genotype_prior({g1}, Relationship::singleton(), founders) *
                family_genotype_prior({g2}, Relationship::singleton(), founders);
            CHECK(joint == doctest::Approx(product).epsilon(1e-12));
        }
}

TEST_CASE("sib pair double major homozygote prior") {
    // 0.25*q^4 + 0.5*q^3 + 0.25*q^2 at p = 0.2 (q = 0.8): 0.5184
    const double q = 0.8;
    const double expected = 0.25 * q * q * q * q + 0.5 * q * q * q + 0.25 * q * q;
    CHECK(family_genotype_prior({0, 0}, Relationship::sib_pair(),
                                FounderFrequencies::from_maf(0.2)) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("family prior normalizes and matches kinship-weighted table") {
    const FounderFrequencies founders = FounderFrequencies::from_maf(0.17);
    for (const auto& rel : {Relationship::sib_pair(), Relationship::cousin_pair(),
                            Relationship::relative_pair(0.3, 0.45, 0.25)}) {
        const auto& k = icc_distribution(rel);
        std::array<double, 3> weights{};
        for (std::size_t e = 0; e < 3; ++e) weights[e] = k.entries[e].second;
        double total = 0.0;
        for (GenotypeCode g1 = 0; g1 <= 2; ++g1)
            for (GenotypeCode g2 = 0; g2 <= 2; ++g2) {
                const double prior = family_genotype_prior({g1, g2}, rel, founders);
                total += prior;
                double expected = 0.0;
                for (int phi = 0; phi <= 2; ++phi)
                    expected += weights[static_cast<std::size_t>(phi)] *
                                static_cast<double>(oracles::ordered_pair_prior(g1, g2, phi, 0.17));
                CHECK(prior == doctest::Approx(expected).epsilon(1e-12));
            }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }

    // trio: every 27-cell matrix sums to one
    double total = 0.0;
    for (GenotypeCode a = 0; a <= 2; ++a)
        for (GenotypeCode b = 0; b <= 2; ++b)
            for (GenotypeCode c = 0; c <= 2; ++c)
                total += family_genotype_prior({a, b, c}, Relationship::trio(), founders);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("enumeration cap raises a capacity error naming the relationship") {
    const int m = 12;
    std::vector<double> mafs(m, 0.1);
    const FounderFrequencies founders = FounderFrequencies::independent_mafs(mafs);
    try {
        stream_total(Relationship::cousin_pair(), founders);
        FAIL("expected capacity_error");
    } catch (const capacity_error& e) {
        const std::string what = e.what();
        CHECK(what.find("cousin_pair") != std::string::npos);
        CHECK(what.find("12") != std::string::npos);
    }
}

TEST_CASE("founder frequency construction and marginals") {
    const FounderFrequencies f = FounderFrequencies::independent_mafs({0.1, 0.3});
    CHECK(f.num_haplotypes() == 4);
    CHECK(f.maf(0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(f.maf(1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(f.freq(0b11) == doctest::Approx(0.03).epsilon(1e-12));
    CHECK_THROWS_AS(FounderFrequencies(1, {0.6, 0.6}), validation_error);
    CHECK_THROWS_AS(FounderFrequencies(2, {0.5, 0.5}), validation_error);
    CHECK_THROWS_AS(FounderFrequencies::from_maf(1.5), validation_error);
}
