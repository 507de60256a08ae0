// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Scoring of calls against simulated truth and the replication harness that
// compares calling methods on byte-identical datasets: pedigree-aware
// (pedgc), independent single-SNP (seqem), LD pipeline on unrelated members
// (hapgc), and LD pipeline with relationships (pedhapgc).
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "famgc/caller.hpp"
#include "famgc/em_engine.hpp"
#include "famgc/parallel.hpp"
#include "famgc/simulator.hpp"
#include "famgc/types.hpp"

namespace famgc {

struct StratumCounts {
    std::int64_t errors = 0;
    std::int64_t total = 0;

    std::optional<double> pct() const {
        if (total == 0) return std::nullopt;
        return 100.0 * static_cast<double>(errors) / static_cast<double>(total);
    }

    void merge(const StratumCounts& o) {
        errors += o.errors;
        total += o.total;
    }
};

// Error percentages stratified by true genotype: heterozygote (g=1) and
// homozygote (g=0 or 2) strata partition all scored calls. Empty strata
// report as absent rather than 0%.
struct ErrorReport {
    StratumCounts overall, het, hom;

    std::optional<double> overall_pct() const { return overall.pct(); }
    std::optional<double> het_pct() const { return het.pct(); }
    std::optional<double> hom_pct() const { return hom.pct(); }

    void merge(const ErrorReport& o) {
        overall.merge(o.overall);
        het.merge(o.het);
        hom.merge(o.hom);
    }
};

// Scores flattened call/truth matrices (any consistent layout). The
// optional mask selects which entries count.
inline ErrorReport score(const std::vector<GenotypeCode>& calls,
                         const std::vector<GenotypeCode>& truth,
                         const std::vector<bool>& mask = {}) {
    if (calls.size() != truth.size())
        throw validation_error("score: call and truth dimensions disagree");
    if (!mask.empty() && mask.size() != calls.size())
        throw validation_error("score: mask dimension disagrees with calls");
    ErrorReport report;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const bool err = calls[i] != truth[i];
        report.overall.total += 1;
        report.overall.errors += err ? 1 : 0;
        StratumCounts& stratum = truth[i] == 1 ? report.het : report.hom;
        stratum.total += 1;
        stratum.errors += err ? 1 : 0;
    }
    return report;
}

enum class Method { pedgc, seqem, hapgc, pedhapgc };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::pedgc: return "pedgc";
        case Method::seqem: return "seqem";
        case Method::hapgc: return "hapgc";
        case Method::pedhapgc: return "pedhapgc";
    }
    return "?";
}

inline Method parse_method(const std::string& name) {
    if (name == "pedgc") return Method::pedgc;
    if (name == "seqem") return Method::seqem;
    if (name == "hapgc") return Method::hapgc;
    if (name == "pedhapgc") return Method::pedhapgc;
    throw validation_error("unknown method '" + name +
                           "' (expected pedgc, seqem, hapgc or pedhapgc)");
}

// Replication-averaged percentages plus pooled integer tallies.
struct MethodSummary {
    ErrorReport combined;
    std::vector<double> rep_overall;                // per replication, %
    std::vector<std::optional<double>> rep_het, rep_hom;

    static double mean(const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    }

    static double standard_error(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                         static_cast<double>(v.size()));
    }

    double mean_overall() const { return mean(rep_overall); }
    double se_overall() const { return standard_error(rep_overall); }

    static std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
        std::vector<double> defined;
        for (const auto& x : v)
            if (x) defined.push_back(*x);
        if (defined.empty()) return std::nullopt;
        return mean(defined);
    }

    std::optional<double> mean_het() const { return mean_defined(rep_het); }
    std::optional<double> mean_hom() const { return mean_defined(rep_hom); }

    void add_replication(const ErrorReport& rep) {
        combined.merge(rep);
        rep_overall.push_back(rep.overall_pct().value_or(0.0));
        rep_het.push_back(rep.het_pct());
        rep_hom.push_back(rep.hom_pct());
    }
};

struct MethodComparison {
    Method method = Method::pedgc;
    MethodSummary overall;                 // pooled over SNPs
    std::vector<MethodSummary> per_snp;
};

struct ComparisonRow {
    std::string scenario;
    int replications = 0;
    std::vector<std::string> snp_ids;
    std::vector<MethodComparison> methods;
};

struct EvalOptions {
    FitConfig fit;
    PartnerConfig partner;
    CallOptions call;
    int threads = 1;
};

namespace detail {

inline std::uint64_t dataset_fingerprint(const Dataset& data) {
    std::uint64_t h = 1469598103934665603ull; // FNV-1a
    auto feed = [&](std::uint64_t x) {
        h ^= x;
        h *= 1099511628211ull;
    };
    feed(static_cast<std::uint64_t>(data.num_loci));
    for (const auto& f : data.families) {
        feed(static_cast<std::uint64_t>(f.relationship.kind()));
        for (const auto& member : f.member_obs)
            for (const auto& o : member) {
                feed(static_cast<std::uint64_t>(o.depth));
                feed(static_cast<std::uint64_t>(o.variants));
            }
    }
    return h;
}

// Calls one method on a replication, returning a flattened matrix indexed
// (individual, locus) -> i*M + m with individuals in dataset order.
inline std::vector<GenotypeCode> apply_method(Method method, const Dataset& data,
                                              const EvalOptions& options, std::uint64_t fit_seed) {
    const int loci = data.num_loci;
    int individuals = 0;
    for (const auto& f : data.families) individuals += f.num_members();
    std::vector<GenotypeCode> calls(static_cast<std::size_t>(individuals * loci), 0);

    auto fill_from_single = [&](int locus, const std::vector<CallResult>& family_calls,
                                const Dataset& shaped) {
        std::size_t row = 0;
        for (std::size_t fi = 0; fi < shaped.families.size(); ++fi) {
            const auto& call = family_calls[fi];
            for (int s = 0; s < shaped.families[fi].num_members(); ++s, ++row)
                calls[row * static_cast<std::size_t>(loci) + static_cast<std::size_t>(locus)] =
                    call.mode_genotypes[static_cast<std::size_t>(s)];
        }
    };

    switch (method) {
        case Method::pedgc:
        case Method::seqem: {
            const Dataset view = method == Method::seqem ? data.as_unrelated() : data;
            for (int m = 0; m < loci; ++m) {
                FitConfig cfg = options.fit;
                cfg.rng_seed = derived_fit_seed(fit_seed, static_cast<std::uint64_t>(method),
                                                static_cast<std::uint64_t>(m));
                auto [report, family_calls] =
                    single_snp_fit_and_call(view.locus_view(m), cfg, options.call);
                fill_from_single(m, family_calls, view);
            }
            break;
        }
        case Method::hapgc:
        case Method::pedhapgc: {
            const Dataset view = method == Method::hapgc ? data.as_unrelated() : data;
            if (loci <= 3) {
                // Small regions: fit the full joint haplotype model and call
                // every SNP simultaneously.
                FitConfig cfg = options.fit;
                cfg.rng_seed =
                    derived_fit_seed(fit_seed, static_cast<std::uint64_t>(method), 0xD1);
                const FitReport report = fit(view, cfg);
                ConfigurationCache cache;
                std::size_t row = 0;
                for (const auto& family : view.families) {
                    const CallResult call =
                        call_family(family, report.theta, options.call, &cache);
                    for (int s = 0; s < family.num_members(); ++s, ++row)
                        for (int m = 0; m < loci; ++m)
                            calls[row * static_cast<std::size_t>(loci) +
                                  static_cast<std::size_t>(m)] =
                                call.mode_genotypes[static_cast<std::size_t>(s * loci + m)];
                }
                break;
            }
            // Wide regions: three-step partner pipeline.
            LdPipelineConfig cfg;
            cfg.partner = options.partner;
            cfg.fit = options.fit;
            cfg.fit.rng_seed =
                derived_fit_seed(fit_seed, static_cast<std::uint64_t>(method), 0xA11);
            cfg.call = options.call;
            cfg.threads = 1; // replication level already parallel
            const LdPipelineResult result = ld_pipeline(view, cfg);
            for (int m = 0; m < loci; ++m)
                fill_from_single(m, result.final_calls[static_cast<std::size_t>(m)], view);
            break;
        }
    }
    return calls;
}

} // namespace detail

// Runs the scenario for `replications` seeds, fits and calls each method on
// the same simulated data, and scores against truth. Scoring can be
// restricted to the scenario's score_members.
inline ComparisonRow run_comparison(const ScenarioConfig& scenario,
                                    const std::vector<Method>& methods, int replications,
                                    std::uint64_t seed, const EvalOptions& options = {}) {
    scenario.validate();
    if (methods.empty()) throw validation_error("run_comparison needs at least one method");
    const int loci = scenario.num_loci();
    for (Method m : methods)
        if ((m == Method::hapgc || m == Method::pedhapgc) && loci < 2)
            throw validation_error("LD methods need a scenario with at least two SNPs");

    const int members = scenario.relationship.num_members();
    const int individuals = members * scenario.num_families;

    std::vector<bool> entry_mask;
    if (!scenario.score_members.empty()) {
        std::vector<bool> member_mask(static_cast<std::size_t>(members), false);
        for (int s : scenario.score_members) member_mask[static_cast<std::size_t>(s)] = true;
        entry_mask.assign(static_cast<std::size_t>(individuals * loci), false);
        for (int i = 0; i < individuals; ++i)
            for (int m = 0; m < loci; ++m)
                entry_mask[static_cast<std::size_t>(i * loci + m)] =
                    member_mask[static_cast<std::size_t>(i % members)];
    }

    // per replication, per method: overall report + per-snp reports
    struct RepScores {
        std::vector<ErrorReport> overall;               // per method
        std::vector<std::vector<ErrorReport>> per_snp;  // per method, per snp
    };
    std::vector<RepScores> rep_scores(static_cast<std::size_t>(replications));

    parallel_for(replications, options.threads, [&](int k) {
        const Replication rep = run_scenario(scenario, seed, k);
        const std::uint64_t fingerprint = detail::dataset_fingerprint(rep.dataset);

        std::vector<GenotypeCode> truth(static_cast<std::size_t>(individuals * loci));
        std::size_t row = 0;
        for (const auto& fam : rep.truth.family_genotypes)
            for (GenotypeCode g : fam) truth[row++] = g;

        RepScores scores;
        scores.overall.resize(methods.size());
        scores.per_snp.assign(methods.size(),
                              std::vector<ErrorReport>(static_cast<std::size_t>(loci)));
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            if (detail::dataset_fingerprint(rep.dataset) != fingerprint)
                throw std::logic_error("dataset changed between method runs");
            const std::vector<GenotypeCode> calls = detail::apply_method(
                methods[mi], rep.dataset, options,
                mix64(seed ^ mix64(static_cast<std::uint64_t>(k) + 0x5eed)));
            scores.overall[mi] = score(calls, truth, entry_mask);
            for (int m = 0; m < loci; ++m) {
                std::vector<GenotypeCode> c(static_cast<std::size_t>(individuals));
                std::vector<GenotypeCode> t(static_cast<std::size_t>(individuals));
                std::vector<bool> snp_mask;
                if (!entry_mask.empty()) snp_mask.resize(static_cast<std::size_t>(individuals));
                for (int i = 0; i < individuals; ++i) {
                    c[static_cast<std::size_t>(i)] =
                        calls[static_cast<std::size_t>(i * loci + m)];
                    t[static_cast<std::size_t>(i)] =
                        truth[static_cast<std::size_t>(i * loci + m)];
                    if (!entry_mask.empty())
                        snp_mask[static_cast<std::size_t>(i)] =
                            entry_mask[static_cast<std::size_t>(i * loci + m)];
                }
                scores.per_snp[mi][static_cast<std::size_t>(m)] = score(c, t, snp_mask);
            }
        }
        rep_scores[static_cast<std::size_t>(k)] = std::move(scores);
    });

    ComparisonRow rowout;
    rowout.scenario = scenario.name;
    rowout.replications = replications;
    {
        const Replication rep0 = run_scenario(scenario, seed, 0);
        rowout.snp_ids = rep0.dataset.snp_ids;
    }
    rowout.methods.resize(methods.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        rowout.methods[mi].method = methods[mi];
        rowout.methods[mi].per_snp.resize(static_cast<std::size_t>(loci));
        for (int k = 0; k < replications; ++k) {
            rowout.methods[mi].overall.add_replication(
                rep_scores[static_cast<std::size_t>(k)].overall[mi]);
            for (int m = 0; m < loci; ++m)
                rowout.methods[mi].per_snp[static_cast<std::size_t>(m)].add_replication(
                    rep_scores[static_cast<std::size_t>(k)].per_snp[mi][static_cast<std::size_t>(m)]);
        }
    }
    return rowout;
}

// Read-budget trade-off at a single SNP: the same total expected read count
// spent either on sib pairs alone at higher depth, or spread over sibs and
// their parents at lower depth. Both arms are scored on the sibs.
struct ReadBudgetConfig {
    double maf = 0.1;
    double error_rate = 0.01;
    int families = 50;
    double depth_sibs_only = 10.0;
    double depth_with_parents = 5.0;
    int replications = 200;
    std::uint64_t seed = 1;
    EvalOptions options;
};

struct ReadBudgetResult {
    ComparisonRow sibs_only;
    ComparisonRow with_parents;
};

inline ReadBudgetResult read_budget_experiment(const ReadBudgetConfig& config) {
    ScenarioConfig sibs;
    sibs.name = "sibs_only";
    sibs.relationship = Relationship::sib_pair();
    sibs.num_families = config.families;
    sibs.founders = FounderFrequencies::from_maf(config.maf);
    sibs.depth = DepthModel::poisson_mean({config.depth_sibs_only});
    sibs.errors = ErrorModel::fixed_rates({config.error_rate});

    ScenarioConfig with_parents = sibs;
    with_parents.name = "sibs_and_parents";
    with_parents.relationship =
        Relationship::custom(nuclear_family_icc(2), "parents_plus_two_sibs");
    with_parents.depth = DepthModel::poisson_mean({config.depth_with_parents});
    with_parents.score_members = {2, 3}; // members 0,1 are the parents

    ReadBudgetResult result;
    result.sibs_only = run_comparison(sibs, {Method::pedgc}, config.replications, config.seed,
                                      config.options);
    result.with_parents = run_comparison(with_parents, {Method::pedgc}, config.replications,
                                         config.seed, config.options);
    return result;
}

} // namespace famgc
