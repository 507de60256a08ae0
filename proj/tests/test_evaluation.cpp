// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "famgc/evaluation.hpp"

using namespace famgc;

TEST_CASE("scoring strata") {
    // all correct
    const ErrorReport clean = score({0, 1, 2, 1}, {0, 1, 2, 1});
    CHECK(clean.overall_pct() == doctest::Approx(0.0));
    CHECK(clean.het_pct() == doctest::Approx(0.0));
    CHECK(clean.hom_pct() == doctest::Approx(0.0));

    // every truth heterozygous, every call wrong: hom stratum is absent
    const ErrorReport het_only = score({0, 0, 0}, {1, 1, 1});
    CHECK(het_only.overall_pct() == doctest::Approx(100.0));
    CHECK(het_only.het_pct() == doctest::Approx(100.0));
    CHECK_FALSE(het_only.hom_pct().has_value());

    // 1 error among 50 heterozygotes, 2 among 950 homozygotes
    std::vector<GenotypeCode> truth, calls;
    for (int i = 0; i < 50; ++i) {
        truth.push_back(1);
        calls.push_back(i == 0 ? 0 : 1);
    }
    for (int i = 0; i < 950; ++i) {
        truth.push_back(0);
        calls.push_back(i < 2 ? 1 : 0);
    }
    const ErrorReport mixed = score(calls, truth);
    CHECK(*mixed.overall_pct() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(*mixed.het_pct() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(*mixed.hom_pct() == doctest::Approx(100.0 * 2 / 950).epsilon(1e-12));

    // mask restricts scoring
    const ErrorReport masked = score({0, 1}, {0, 0}, {true, false});
    CHECK(masked.overall.total == 1);
    CHECK(masked.overall.errors == 0);

    CHECK_THROWS_AS(score({0, 1}, {0}), validation_error);
    CHECK_THROWS_AS(score({0, 1}, {0, 1}, {true}), validation_error);
}

TEST_CASE("stratified counts reconcile in every report") {
    ScenarioConfig sc;
    sc.relationship = Relationship::sib_pair();
    sc.num_families = 40;
    sc.founders = FounderFrequencies::from_maf(0.2);
    sc.depth = DepthModel::poisson_mean({10.0});
    sc.errors = ErrorModel::fixed_rates({0.05});
    EvalOptions options;
    options.threads = 2;
    const ComparisonRow row =
        run_comparison(sc, {Method::pedgc, Method::seqem}, 6, 99, options);
    for (const auto& mc : row.methods) {
        const auto& c = mc.overall.combined;
        CHECK(c.het.errors + c.hom.errors == c.overall.errors);
        CHECK(c.het.total + c.hom.total == c.overall.total);
        CHECK(c.overall.total == 6 * 40 * 2);
        CHECK(static_cast<int>(mc.overall.rep_overall.size()) == row.replications);
    }
}

TEST_CASE("noiseless reads drive every method to zero error") {
    ScenarioConfig sc;
    sc.relationship = Relationship::trio();
    sc.num_families = 40;
    sc.founders = FounderFrequencies::from_maf(0.2);
    sc.depth = DepthModel::poisson_mean({30.0});
    sc.errors = ErrorModel::fixed_rates({0.001});
    const ComparisonRow row = run_comparison(sc, {Method::pedgc, Method::seqem}, 5, 7);
    for (const auto& mc : row.methods) CHECK(mc.overall.mean_overall() < 0.1);
}

TEST_CASE("thread count does not change results") {
    ScenarioConfig sc;
    sc.relationship = Relationship::sib_pair();
    sc.num_families = 30;
    sc.founders = FounderFrequencies::from_maf(0.1);
    sc.depth = DepthModel::poisson_mean({10.0});
    sc.errors = ErrorModel::fixed_rates({0.05});
    EvalOptions serial, parallel;
    serial.threads = 1;
    parallel.threads = 4;
    const ComparisonRow a = run_comparison(sc, {Method::pedgc}, 6, 11, serial);
    const ComparisonRow b = run_comparison(sc, {Method::pedgc}, 6, 11, parallel);
    CHECK(a.methods[0].overall.rep_overall == b.methods[0].overall.rep_overall);
    CHECK(a.methods[0].overall.combined.overall.errors ==
          b.methods[0].overall.combined.overall.errors);
}

TEST_CASE("read budget arms are deterministic and identically configured arms coincide") {
    ReadBudgetConfig cfg;
    cfg.replications = 4;
    cfg.seed = 5;
    cfg.families = 20;
    const ReadBudgetResult a = read_budget_experiment(cfg);
    const ReadBudgetResult b = read_budget_experiment(cfg);
    CHECK(a.sibs_only.methods[0].overall.rep_overall ==
          b.sibs_only.methods[0].overall.rep_overall);
    CHECK(a.with_parents.methods[0].overall.rep_overall ==
          b.with_parents.methods[0].overall.rep_overall);

    // degenerate: both arms configured as plain sib pairs at the same depth
    ScenarioConfig sibs;
    sibs.relationship = Relationship::sib_pair();
    sibs.num_families = 20;
    sibs.founders = FounderFrequencies::from_maf(0.1);
    sibs.depth = DepthModel::poisson_mean({10.0});
    sibs.errors = ErrorModel::fixed_rates({0.01});
    const ComparisonRow armA = run_comparison(sibs, {Method::pedgc}, 4, 5);
    const ComparisonRow armB = run_comparison(sibs, {Method::pedgc}, 4, 5);
    CHECK(armA.methods[0].overall.rep_overall == armB.methods[0].overall.rep_overall);
}

TEST_CASE("wide regions route the LD methods through the partner pipeline") {
    ScenarioConfig sc;
    sc.relationship = Relationship::singleton();
    sc.num_families = 40;
    sc.founders = FounderFrequencies::independent_mafs({0.3, 0.3, 0.3, 0.3});
    sc.depth = DepthModel::poisson_mean(std::vector<double>(4, 10.0));
    sc.errors = ErrorModel::fixed_rates(std::vector<double>(4, 0.05));
    const ComparisonRow a = run_comparison(sc, {Method::hapgc, Method::seqem}, 2, 17);
    const ComparisonRow b = run_comparison(sc, {Method::hapgc, Method::seqem}, 2, 17);
    CHECK(a.methods[0].overall.combined.overall.total == 2 * 40 * 4);
    CHECK(a.methods[0].overall.rep_overall == b.methods[0].overall.rep_overall);
    // independent SNPs: the pipeline leaves single-SNP behavior intact
    CHECK(std::abs(a.methods[0].overall.mean_overall() -
                   a.methods[1].overall.mean_overall()) < 2.0);
}

TEST_CASE("read budget arms are nearly equal at very rare alleles") {
    ReadBudgetConfig cfg;
    cfg.maf = 0.001;
    cfg.error_rate = 0.01;
    cfg.replications = 100;
    cfg.seed = 210;
    const ReadBudgetResult result = read_budget_experiment(cfg);
    const double sibs = result.sibs_only.methods[0].overall.mean_overall();
    const double parents = result.with_parents.methods[0].overall.mean_overall();
    CHECK(sibs < 0.2);
    CHECK(parents < 0.2);
    CHECK(std::abs(sibs - parents) < 0.1);
}

TEST_CASE("LD methods refuse single-SNP scenarios") {
    ScenarioConfig sc;
    sc.relationship = Relationship::singleton();
    sc.num_families = 10;
    sc.founders = FounderFrequencies::from_maf(0.1);
    sc.depth = DepthModel::poisson_mean({10.0});
    sc.errors = ErrorModel::fixed_rates({0.05});
    CHECK_THROWS_AS(run_comparison(sc, {Method::hapgc}, 2, 1), validation_error);
}
