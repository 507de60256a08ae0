// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Genotype and diploid-haplotype calling as the mode of the posterior
// distribution given fitted parameters, plus the three-step region pipeline:
// per-SNP calls, pairwise correlation of the called codes, and joint
// re-calling of each SNP with a well-correlated low-error partner.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "famgc/em_engine.hpp"
#include "famgc/parallel.hpp"
#include "famgc/pedigree_prior.hpp"
#include "famgc/rng.hpp"
#include "famgc/types.hpp"

namespace famgc {

struct CallOptions {
    EnumerationLimits limits;
    // Posteriors within this relative distance of the maximum count as tied.
    double tie_tol = 1e-12;
    int max_diplotype_loci = 3;
};

struct CallResult {
    GenotypeMatrix mode_genotypes; // member-major s*M + m
    std::optional<std::vector<DiploidHaplotype>> mode_diplotypes;
    double mode_posterior = 0.0;
    std::vector<std::array<double, 3>> marginals; // per (member, locus), s*M + m
    bool tie_flag = false;
};

namespace detail {

struct FamilyPosterior {
    std::shared_ptr<const ConfigurationSet> set;
    std::vector<double> probs; // normalized, aligned with set
};

inline FamilyPosterior family_posterior(const Family& family, const ModelParams& theta,
                                        const EnumerationLimits& limits,
                                        ConfigurationCache* cache) {
    theta.validate();
    family.validate(theta.num_loci());
    ConfigurationCache local;
    FamilyPosterior out;
    out.set = configurations_for(cache ? *cache : local, family.relationship, theta.num_loci(),
                                 limits);
    std::vector<double> log_prior;
    out.set->log_priors(theta.founders, log_prior);
    const std::vector<double> table = read_table(family, theta.errors);
    out.probs.resize(out.set->size());
    double max = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < out.set->size(); ++c) {
        out.probs[c] = log_prior[c] + config_read_log_likelihood(*out.set, c, table);
        if (out.probs[c] > max) max = out.probs[c];
    }
    if (!std::isfinite(max))
        throw validation_error("family " + family.id +
                               ": observed reads impossible under the supplied parameters");
    double norm = 0.0;
    for (double& p : out.probs) {
        p = std::exp(p - max);
        norm += p;
    }
    for (double& p : out.probs) p /= norm;
    return out;
}

template <typename Key>
int total_minor_alleles(const Key& key);

template <>
inline int total_minor_alleles<GenotypeMatrix>(const GenotypeMatrix& g) {
    int total = 0;
    for (GenotypeCode c : g) total += c;
    return total;
}

template <>
inline int total_minor_alleles<std::vector<DiploidHaplotype>>(
    const std::vector<DiploidHaplotype>& dips) {
    int total = 0;
    for (const auto& d : dips) {
        Haplotype bits = d.first;
        while (bits) {
            total += static_cast<int>(bits & 1u);
            bits >>= 1;
        }
        bits = d.second;
        while (bits) {
            total += static_cast<int>(bits & 1u);
            bits >>= 1;
        }
    }
    return total;
}

// Mode of an aggregated posterior table. Near-equal maxima count as a tie,
// broken toward the smallest total minor-allele count, then the
// lexicographically smallest key (the map iterates keys in that order).
template <typename Key>
std::tuple<Key, double, bool> select_mode(const std::map<Key, double>& table, double tie_tol) {
    double pmax = 0.0;
    for (const auto& [key, p] : table) pmax = std::max(pmax, p);
    const double cutoff = pmax * (1.0 - tie_tol);
    const Key* chosen = nullptr;
    double chosen_prob = 0.0;
    int chosen_minor = 0;
    int candidates = 0;
    for (const auto& [key, p] : table) {
        if (p < cutoff) continue;
        ++candidates;
        const int minor = total_minor_alleles<Key>(key);
        if (!chosen || minor < chosen_minor) {
            chosen = &key;
            chosen_prob = p;
            chosen_minor = minor;
        }
    }
    return {*chosen, chosen_prob, candidates > 1};
}

inline std::vector<std::array<double, 3>> genotype_marginals(const FamilyPosterior& post,
                                                             int members, int loci) {
    std::vector<std::array<double, 3>> marg(
        static_cast<std::size_t>(members * loci), {0.0, 0.0, 0.0});
    for (std::size_t c = 0; c < post.probs.size(); ++c) {
        const GenotypeMatrix& g = post.set->genotypes[c];
        for (std::size_t i = 0; i < g.size(); ++i) marg[i][g[i]] += post.probs[c];
    }
    return marg;
}

} // namespace detail

// Posterior-mode genotype call for one family.
inline CallResult call_family(const Family& family, const ModelParams& theta,
                              const CallOptions& options = {},
                              detail::ConfigurationCache* cache = nullptr) {
    const detail::FamilyPosterior post =
        detail::family_posterior(family, theta, options.limits, cache);
    const int loci = theta.num_loci();

    std::map<GenotypeMatrix, double> by_genotype;
    for (std::size_t c = 0; c < post.probs.size(); ++c)
        by_genotype[post.set->genotypes[c]] += post.probs[c];

    CallResult result;
    auto [mode, prob, tie] = detail::select_mode(by_genotype, options.tie_tol);
    result.mode_genotypes = std::move(mode);
    result.mode_posterior = prob;
    result.tie_flag = tie;
    result.marginals = detail::genotype_marginals(post, family.num_members(), loci);
    return result;
}

// Posterior-mode call over per-member unordered diploid haplotypes.
inline CallResult call_diploid_haplotypes(const Family& family, const ModelParams& theta,
                                          const CallOptions& options = {},
                                          detail::ConfigurationCache* cache = nullptr) {
    if (theta.num_loci() > options.max_diplotype_loci)
        throw capacity_error("diploid haplotype calling supports at most " +
                             std::to_string(options.max_diplotype_loci) + " loci, got " +
                             std::to_string(theta.num_loci()));
    const detail::FamilyPosterior post =
        detail::family_posterior(family, theta, options.limits, cache);
    const int loci = theta.num_loci();

    std::map<std::vector<DiploidHaplotype>, double> by_diplotype;
    for (std::size_t c = 0; c < post.probs.size(); ++c)
        by_diplotype[post.set->member_dips[c]] += post.probs[c];

    CallResult result;
    auto [mode, prob, tie] = detail::select_mode(by_diplotype, options.tie_tol);
    result.mode_genotypes = genotypes_of(mode, loci);
    result.mode_diplotypes = std::move(mode);
    result.mode_posterior = prob;
    result.tie_flag = tie;
    result.marginals = detail::genotype_marginals(post, family.num_members(), loci);
    return result;
}

// Re-call one locus of a multi-locus model: the posterior is marginalized
// onto the target locus's member genotype column before taking the mode.
// The result is shaped like a single-locus call.
inline CallResult call_marginal_locus(const Family& family, const ModelParams& theta,
                                      int target_locus, const CallOptions& options = {},
                                      detail::ConfigurationCache* cache = nullptr) {
    const detail::FamilyPosterior post =
        detail::family_posterior(family, theta, options.limits, cache);
    const int loci = theta.num_loci();
    const int members = family.num_members();

    std::map<GenotypeMatrix, double> by_column;
    GenotypeMatrix column(static_cast<std::size_t>(members));
    for (std::size_t c = 0; c < post.probs.size(); ++c) {
        const GenotypeMatrix& g = post.set->genotypes[c];
        for (int s = 0; s < members; ++s)
            column[static_cast<std::size_t>(s)] =
                g[static_cast<std::size_t>(s * loci + target_locus)];
        by_column[column] += post.probs[c];
    }

    CallResult result;
    auto [mode, prob, tie] = detail::select_mode(by_column, options.tie_tol);
    result.mode_genotypes = std::move(mode);
    result.mode_posterior = prob;
    result.tie_flag = tie;
    const auto full = detail::genotype_marginals(post, members, loci);
    result.marginals.resize(static_cast<std::size_t>(members));
    for (int s = 0; s < members; ++s)
        result.marginals[static_cast<std::size_t>(s)] =
            full[static_cast<std::size_t>(s * loci + target_locus)];
    return result;
}

struct CorrelationEstimate {
    double r = 0.0;
    bool degenerate = false; // zero variance in either vector
};

// Pearson correlation of called genotype codes across individuals
// (composite, phase-free).
inline CorrelationEstimate genotype_correlation(std::span<const GenotypeCode> a,
                                                std::span<const GenotypeCode> b) {
    if (a.size() != b.size()) throw validation_error("correlation needs equal-length call vectors");
    if (a.size() < 2) throw validation_error("correlation needs at least two individuals");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return {0.0, true};
    return {sab / std::sqrt(saa * sbb), false};
}

struct PartnerConfig {
    double min_r2 = 0.5;
    double lambda = 1.0; // error-rate weight in the score r^2 - lambda*alpha
};

struct PairSelection {
    int target = 0;
    int partner = 0;
    double r = 0.0;
    double partner_alpha = 0.0;
};

// Picks the partner SNP maximizing r^2 - lambda*alpha among SNPs whose
// squared correlation with the target passes min_r2; none when no SNP does.
inline std::optional<PairSelection> select_partner(int target,
                                                   const std::vector<std::vector<double>>& r_matrix,
                                                   const std::vector<double>& alphas,
                                                   const PartnerConfig& config = {}) {
    const int m = static_cast<int>(r_matrix.size());
    if (target < 0 || target >= m) throw validation_error("partner target index out of range");
    if (static_cast<int>(alphas.size()) != m)
        throw validation_error("alpha vector length does not match correlation matrix");
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(r_matrix[static_cast<std::size_t>(i)].size()) != m)
            throw validation_error("correlation matrix is not square");
        for (int j = 0; j < i; ++j)
            if (std::abs(r_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                         r_matrix[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) > 1e-9)
                throw validation_error("correlation matrix is not symmetric");
    }
    std::optional<PairSelection> best;
    double best_score = 0.0;
    for (int j = 0; j < m; ++j) {
        if (j == target) continue;
        const double r = r_matrix[static_cast<std::size_t>(target)][static_cast<std::size_t>(j)];
        const double r2 = r * r;
        if (r2 < config.min_r2) continue;
        const double score = r2 - config.lambda * alphas[static_cast<std::size_t>(j)];
        if (!best || score > best_score) {
            best = PairSelection{target, j, r, alphas[static_cast<std::size_t>(j)]};
            best_score = score;
        }
    }
    return best;
}

// Per-SNP model estimates from pipeline step 1.
struct SnpFitSummary {
    double maf = 0.0;
    double alpha = 0.0;
    bool converged = true;
};

struct LdPipelineConfig {
    PartnerConfig partner;
    FitConfig fit;
    CallOptions call;
    int threads = 1;
};

struct LdPipelineResult {
    std::vector<std::vector<CallResult>> step1_calls; // [snp][family]
    std::vector<std::vector<CallResult>> final_calls; // [snp][family]
    std::vector<SnpFitSummary> step1_fits;
    std::vector<std::vector<double>> r_matrix;
    std::vector<std::optional<PairSelection>> partners;
    bool all_converged = true;
};

namespace detail {

inline std::uint64_t derived_fit_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(base) ^ mix64(a) ^ (mix64(b) << 1));
}

} // namespace detail

// Fit a single-locus dataset and call every family under the estimate.
inline std::pair<FitReport, std::vector<CallResult>> single_snp_fit_and_call(
    const Dataset& data, const FitConfig& fit_cfg, const CallOptions& call_opts = {}) {
    FitReport report = fit(data, fit_cfg);
    std::vector<CallResult> calls;
    calls.reserve(data.families.size());
    detail::ConfigurationCache cache;
    for (const auto& family : data.families)
        calls.push_back(call_family(family, report.theta, call_opts, &cache));
    return {std::move(report), std::move(calls)};
}

// Three-step region pipeline. Step 1 fits and calls each SNP on its own;
// step 2 estimates pairwise correlations from the called codes of all
// sequenced individuals; step 3 refits a two-locus model for each SNP that
// has a partner and re-calls only the target from the joint posterior.
inline LdPipelineResult ld_pipeline(const Dataset& data, const LdPipelineConfig& config = {}) {
    data.validate();
    const int num_snps = data.num_loci;
    if (num_snps < 2) throw validation_error("the region pipeline needs at least two SNPs");

    LdPipelineResult result;
    result.step1_calls.resize(static_cast<std::size_t>(num_snps));
    result.step1_fits.resize(static_cast<std::size_t>(num_snps));

    parallel_for(num_snps, config.threads, [&](int m) {
        FitConfig cfg = config.fit;
        cfg.rng_seed = detail::derived_fit_seed(config.fit.rng_seed, 1, static_cast<std::uint64_t>(m));
        auto [report, calls] = single_snp_fit_and_call(data.locus_view(m), cfg, config.call);
        result.step1_fits[static_cast<std::size_t>(m)] =
            SnpFitSummary{report.theta.founders.maf(0), report.theta.errors.at(0), report.converged};
        result.step1_calls[static_cast<std::size_t>(m)] = std::move(calls);
    });
    for (const auto& f : result.step1_fits)
        if (!f.converged) result.all_converged = false;

    // Step 2: correlation of called codes across all sequenced individuals.
    std::vector<std::vector<GenotypeCode>> codes(static_cast<std::size_t>(num_snps));
    for (int m = 0; m < num_snps; ++m) {
        auto& v = codes[static_cast<std::size_t>(m)];
        for (const auto& call : result.step1_calls[static_cast<std::size_t>(m)])
            v.insert(v.end(), call.mode_genotypes.begin(), call.mode_genotypes.end());
    }
    result.r_matrix.assign(static_cast<std::size_t>(num_snps),
                           std::vector<double>(static_cast<std::size_t>(num_snps), 0.0));
    for (int a = 0; a < num_snps; ++a) {
        result.r_matrix[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = 1.0;
        for (int b = a + 1; b < num_snps; ++b) {
            const double r = genotype_correlation(codes[static_cast<std::size_t>(a)],
                                                  codes[static_cast<std::size_t>(b)])
                                 .r;
            result.r_matrix[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = r;
            result.r_matrix[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = r;
        }
    }

    std::vector<double> alphas(static_cast<std::size_t>(num_snps));
    for (int m = 0; m < num_snps; ++m)
        alphas[static_cast<std::size_t>(m)] = result.step1_fits[static_cast<std::size_t>(m)].alpha;
    result.partners.resize(static_cast<std::size_t>(num_snps));
    for (int m = 0; m < num_snps; ++m)
        result.partners[static_cast<std::size_t>(m)] =
            select_partner(m, result.r_matrix, alphas, config.partner);

    // Step 3: joint refit per unordered partner pair, shared when two
    // targets pick each other; only the target is re-called.
    result.final_calls = result.step1_calls;
    std::map<std::pair<int, int>, ModelParams> pair_fits;
    std::vector<std::pair<int, int>> needed;
    for (int t = 0; t < num_snps; ++t) {
        if (!result.partners[static_cast<std::size_t>(t)]) continue;
        const int j = result.partners[static_cast<std::size_t>(t)]->partner;
        const std::pair<int, int> key{std::min(t, j), std::max(t, j)};
        if (pair_fits.emplace(key, ModelParams{}).second) needed.push_back(key);
    }
    std::vector<ModelParams> fitted(needed.size());
    std::vector<bool> fitted_converged(needed.size(), true);
    parallel_for(static_cast<int>(needed.size()), config.threads, [&](int idx) {
        const auto [a, b] = needed[static_cast<std::size_t>(idx)];
        const Dataset pair_data = data.loci_view({a, b});
        FitConfig cfg = config.fit;
        cfg.rng_seed = detail::derived_fit_seed(config.fit.rng_seed, 2,
                                                static_cast<std::uint64_t>(a) * 1000003ull +
                                                    static_cast<std::uint64_t>(b));
        auto clamp01 = [](double x, double lo, double hi) { return std::min(std::max(x, lo), hi); };
        const double maf_a = clamp01(result.step1_fits[static_cast<std::size_t>(a)].maf, 1e-3, 1.0 - 1e-3);
        const double maf_b = clamp01(result.step1_fits[static_cast<std::size_t>(b)].maf, 1e-3, 1.0 - 1e-3);
        cfg.init = ModelParams{
            FounderFrequencies::independent_mafs({maf_a, maf_b}),
            ErrorRates({clamp01(alphas[static_cast<std::size_t>(a)], 1e-4, 0.49),
                        clamp01(alphas[static_cast<std::size_t>(b)], 1e-4, 0.49)})};
        FitReport report = fit(pair_data, cfg);
        fitted[static_cast<std::size_t>(idx)] = std::move(report.theta);
        fitted_converged[static_cast<std::size_t>(idx)] = report.converged;
    });
    for (std::size_t i = 0; i < needed.size(); ++i) {
        pair_fits[needed[i]] = fitted[i];
        if (!fitted_converged[i]) result.all_converged = false;
    }

    parallel_for(num_snps, config.threads, [&](int t) {
        if (!result.partners[static_cast<std::size_t>(t)]) return;
        const int j = result.partners[static_cast<std::size_t>(t)]->partner;
        const std::pair<int, int> key{std::min(t, j), std::max(t, j)};
        const ModelParams& theta2 = pair_fits.at(key);
        const int target_pos = t == key.first ? 0 : 1;
        const Dataset pair_data = data.loci_view({key.first, key.second});
        detail::ConfigurationCache cache;
        for (std::size_t i = 0; i < pair_data.families.size(); ++i)
            result.final_calls[static_cast<std::size_t>(t)][i] = call_marginal_locus(
                pair_data.families[i], theta2, target_pos, config.call, &cache);
    });

    return result;
}

} // namespace famgc
