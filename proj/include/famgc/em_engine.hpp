// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Maximum-likelihood estimation of theta = (founder haplotype frequencies,
// per-locus read error rates) by EM, treating the unobserved genotypes as
// missing data. The observed-data likelihood of one family sums the product
// of the pedigree prior and the read likelihood over every genotype
// configuration consistent with the relationship.
#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "famgc/parallel.hpp"
#include "famgc/pedigree_prior.hpp"
#include "famgc/read_model.hpp"
#include "famgc/rng.hpp"
#include "famgc/types.hpp"

namespace famgc {

// theta = (pi, alpha).
struct ModelParams {
    FounderFrequencies founders;
    ErrorRates errors;

    int num_loci() const { return founders.num_loci(); }

    void validate() const {
        if (errors.num_loci() != founders.num_loci())
            throw validation_error("founder frequencies and error rates disagree on locus count");
    }
};

// One family: its relationship and, per sequenced member, the per-locus
// read observations. Ids are carried for I/O only; the engine ignores them.
struct Family {
    Relationship relationship = Relationship::singleton();
    std::vector<std::vector<ReadObservation>> member_obs;
    std::string id;
    std::vector<std::string> member_ids;

    int num_members() const { return static_cast<int>(member_obs.size()); }

    friend bool operator==(const Family&, const Family&) = default;

    void validate(int num_loci) const {
        if (num_members() != relationship.num_members())
            throw validation_error("family " + id + ": member count " +
                                   std::to_string(num_members()) + " does not match relationship " +
                                   relationship.name());
        for (const auto& obs : member_obs) {
            if (static_cast<int>(obs.size()) != num_loci)
                throw validation_error("family " + id + ": member observation length != num_loci");
            for (const auto& o : obs) o.validate();
        }
    }
};

struct Dataset {
    int num_loci = 1;
    std::vector<Family> families;
    std::vector<std::string> snp_ids;

    friend bool operator==(const Dataset&, const Dataset&) = default;

    void validate() const {
        for (const auto& f : families) f.validate(num_loci);
    }

    // Restriction to the given loci, in the given order.
    Dataset loci_view(const std::vector<int>& loci) const {
        for (int m : loci)
            if (m < 0 || m >= num_loci)
                throw validation_error("locus index " + std::to_string(m) + " out of range");
        Dataset out;
        out.num_loci = static_cast<int>(loci.size());
        if (!snp_ids.empty())
            for (int m : loci) out.snp_ids.push_back(snp_ids[static_cast<std::size_t>(m)]);
        out.families.reserve(families.size());
        for (const auto& f : families) {
            Family g;
            g.relationship = f.relationship;
            g.id = f.id;
            g.member_ids = f.member_ids;
            g.member_obs.reserve(f.member_obs.size());
            for (const auto& obs : f.member_obs) {
                std::vector<ReadObservation> sub;
                sub.reserve(loci.size());
                for (int m : loci) sub.push_back(obs[static_cast<std::size_t>(m)]);
                g.member_obs.push_back(std::move(sub));
            }
            out.families.push_back(std::move(g));
        }
        return out;
    }

    Dataset locus_view(int locus) const { return loci_view({locus}); }

    // Every member treated as an unrelated singleton family.
    Dataset as_unrelated() const {
        Dataset out;
        out.num_loci = num_loci;
        out.snp_ids = snp_ids;
        for (const auto& f : families) {
            for (std::size_t s = 0; s < f.member_obs.size(); ++s) {
                Family g;
                g.relationship = Relationship::singleton();
                g.id = f.id + ":" + (s < f.member_ids.size() ? f.member_ids[s] : std::to_string(s));
                g.member_obs = {f.member_obs[s]};
                out.families.push_back(std::move(g));
            }
        }
        return out;
    }
};

// Expected complete-data counts accumulated by the E step: founder haplotype
// draw counts, and per locus the reads and miscalls among members whose
// genotype at that locus is homozygous.
struct SufficientStats {
    std::vector<double> haplotype_counts; // length H
    std::vector<double> reads_hom;        // n_+ per locus
    std::vector<double> miscalls_hom;     // u per locus

    SufficientStats() = default;
    SufficientStats(int num_haplotypes, int num_loci)
        : haplotype_counts(static_cast<std::size_t>(num_haplotypes), 0.0),
          reads_hom(static_cast<std::size_t>(num_loci), 0.0),
          miscalls_hom(static_cast<std::size_t>(num_loci), 0.0) {}

    double founder_draws() const {
        double total = 0.0;
        for (double x : haplotype_counts) total += x;
        return total;
    }

    void merge(const SufficientStats& other) {
        for (std::size_t i = 0; i < haplotype_counts.size(); ++i)
            haplotype_counts[i] += other.haplotype_counts[i];
        for (std::size_t m = 0; m < reads_hom.size(); ++m) {
            reads_hom[m] += other.reads_hom[m];
            miscalls_hom[m] += other.miscalls_hom[m];
        }
    }
};

struct FitConfig {
    std::optional<ModelParams> init;
    double tol = 1e-8;
    int max_iter = 5000;
    int max_restarts = 5;
    std::uint64_t rng_seed = 1;
    bool pooled_alpha = false; // single error rate shared across loci
    int threads = 1;           // worker threads for the per-family E step
    EnumerationLimits limits;
};

struct FitReport {
    ModelParams theta;
    std::vector<double> log_likelihood_trace;
    int iterations = 0;
    int restarts = 0;
    bool converged = false;
    bool boundary = false;
    std::vector<bool> alpha_degenerate; // loci with ~zero expected homozygote reads
};

namespace detail {

// Precomputed enumeration of one relationship's configurations, shared by
// every family with that relationship and reused across EM iterations.
// Zero-probability IBD entries are dropped.
struct ConfigurationSet {
    int num_loci = 1;
    int num_members = 1;
    std::vector<double> icc_log_prob;               // per configuration
    std::vector<std::vector<Haplotype>> class_haps; // per configuration
    std::vector<std::vector<DiploidHaplotype>> member_dips;
    std::vector<GenotypeMatrix> genotypes; // member-major, s*M + m

    ConfigurationSet(const Relationship& rel, int loci, const EnumerationLimits& limits)
        : num_loci(loci), num_members(rel.num_members()) {
        // Enumerate against uniform frequencies; per-iteration priors are
        // recomputed from the stored class haplotypes.
        const int h = 1 << loci;
        FounderFrequencies uniform(loci, std::vector<double>(static_cast<std::size_t>(h),
                                                             1.0 / static_cast<double>(h)));
        for_each_family_configuration(rel, uniform, limits, [&](const FamilyConfiguration& fc) {
            if (fc.icc_prob <= 0.0) return;
            icc_log_prob.push_back(std::log(fc.icc_prob));
            class_haps.push_back(fc.class_haplotypes);
            member_dips.push_back(fc.member_diplotypes);
            genotypes.push_back(genotypes_of(fc.member_diplotypes, loci));
        });
    }

    std::size_t size() const { return icc_log_prob.size(); }

    // log prior weight of every configuration under the given frequencies.
    void log_priors(const FounderFrequencies& founders, std::vector<double>& out) const {
        std::vector<double> log_freq(founders.values().size());
        for (std::size_t h = 0; h < log_freq.size(); ++h)
            log_freq[h] = std::log(founders.values()[h]);
        out.resize(size());
        for (std::size_t c = 0; c < size(); ++c) {
            double lp = icc_log_prob[c];
            for (Haplotype h : class_haps[c]) lp += log_freq[h];
            out[c] = lp;
        }
    }
};

struct RelationshipKey {
    Relationship rel;
    bool operator<(const RelationshipKey& o) const {
        if (rel.kind() != o.rel.kind()) return rel.kind() < o.rel.kind();
        if (rel.kinship_weights() != o.rel.kinship_weights())
            return rel.kinship_weights() < o.rel.kinship_weights();
        // Custom distributions rarely repeat; order by entry count then name.
        const auto& a = rel.custom_icc().entries;
        const auto& b = o.rel.custom_icc().entries;
        if (a.size() != b.size()) return a.size() < b.size();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].first.slot_class != b[i].first.slot_class)
                return a[i].first.slot_class < b[i].first.slot_class;
            if (a[i].second != b[i].second) return a[i].second < b[i].second;
        }
        return false;
    }
};

using ConfigurationCache = std::map<RelationshipKey, std::shared_ptr<const ConfigurationSet>>;

inline std::shared_ptr<const ConfigurationSet> configurations_for(ConfigurationCache& cache,
                                                                  const Relationship& rel,
                                                                  int num_loci,
                                                                  const EnumerationLimits& limits) {
    auto it = cache.find(RelationshipKey{rel});
    if (it != cache.end()) return it->second;
    auto set = std::make_shared<const ConfigurationSet>(rel, num_loci, limits);
    cache.emplace(RelationshipKey{rel}, set);
    return set;
}

// Per-member, per-locus, per-genotype read log-likelihood table for one
// family; entry (s, m, g) at ((s*M)+m)*3+g.
inline std::vector<double> read_table(const Family& family, const ErrorRates& errors) {
    const int loci = errors.num_loci();
    std::vector<double> table(static_cast<std::size_t>(family.num_members() * loci * 3));
    std::size_t k = 0;
    for (const auto& obs : family.member_obs)
        for (int m = 0; m < loci; ++m)
            for (GenotypeCode g = 0; g <= 2; ++g)
                table[k++] = read_log_likelihood(obs[static_cast<std::size_t>(m)], g, errors.at(m));
    return table;
}

inline double config_read_log_likelihood(const ConfigurationSet& set, std::size_t c,
                                         const std::vector<double>& table) {
    const GenotypeMatrix& g = set.genotypes[c];
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) total += table[i * 3 + g[i]];
    return total;
}

} // namespace detail

// log Pr(reads | relationship; theta) for one family, by log-sum-exp over
// the configuration stream.
inline double family_log_likelihood(const Family& family, const ModelParams& theta,
                                    const EnumerationLimits& limits = {}) {
    theta.validate();
    family.validate(theta.num_loci());
    detail::ConfigurationSet set(family.relationship, theta.num_loci(), limits);
    std::vector<double> log_prior;
    set.log_priors(theta.founders, log_prior);
    const std::vector<double> table = detail::read_table(family, theta.errors);
    std::vector<double> terms(set.size());
    for (std::size_t c = 0; c < set.size(); ++c)
        terms[c] = log_prior[c] + detail::config_read_log_likelihood(set, c, table);
    return log_sum_exp(terms);
}

struct EStepResult {
    SufficientStats stats;
    // Per family: normalized posterior over its configuration set.
    std::vector<std::vector<double>> family_posteriors;
    std::vector<double> family_log_likelihoods;
    double total_log_likelihood = 0.0;
};

// Parallel map over families with a merge in family-index order, so the
// result is bit-identical for every thread count.
inline EStepResult e_step(const Dataset& data, const ModelParams& theta,
                          const EnumerationLimits& limits = {},
                          detail::ConfigurationCache* shared_cache = nullptr, int threads = 1) {
    theta.validate();
    data.validate();
    if (theta.num_loci() != data.num_loci)
        throw validation_error("parameter and dataset locus counts disagree");

    const int loci = data.num_loci;
    const int num_haps = theta.founders.num_haplotypes();
    const std::size_t num_families = data.families.size();

    EStepResult out;
    out.stats = SufficientStats(num_haps, loci);
    out.family_posteriors.resize(num_families);
    out.family_log_likelihoods.resize(num_families);

    detail::ConfigurationCache local_cache;
    detail::ConfigurationCache& cache = shared_cache ? *shared_cache : local_cache;
    std::map<const detail::ConfigurationSet*, std::vector<double>> priors;
    std::vector<std::pair<const detail::ConfigurationSet*, const std::vector<double>*>>
        family_sets(num_families);
    for (std::size_t fi = 0; fi < num_families; ++fi) {
        auto set = detail::configurations_for(cache, data.families[fi].relationship, loci, limits);
        auto [it, inserted] = priors.try_emplace(set.get());
        if (inserted) set->log_priors(theta.founders, it->second);
        family_sets[fi] = {set.get(), &it->second};
    }

    std::vector<SufficientStats> family_stats(num_families);
    parallel_for(static_cast<int>(num_families), threads, [&](int f) {
        const std::size_t fi = static_cast<std::size_t>(f);
        const Family& family = data.families[fi];
        const detail::ConfigurationSet& set = *family_sets[fi].first;
        const std::vector<double>& log_prior = *family_sets[fi].second;

        const std::vector<double> table = detail::read_table(family, theta.errors);
        std::vector<double> post(set.size());
        double max = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < set.size(); ++c) {
            post[c] = log_prior[c] + detail::config_read_log_likelihood(set, c, table);
            if (post[c] > max) max = post[c];
        }
        if (!std::isfinite(max))
            throw validation_error("family " + family.id +
                                   ": observed reads impossible under current parameters");
        double norm = 0.0;
        for (double& p : post) {
            p = std::exp(p - max);
            norm += p;
        }
        const double family_ll = max + std::log(norm);
        for (double& p : post) p /= norm;

        SufficientStats stats(num_haps, loci);
        for (std::size_t c = 0; c < set.size(); ++c) {
            const double w = post[c];
            if (w == 0.0) continue;
            for (Haplotype h : set.class_haps[c]) stats.haplotype_counts[h] += w;
            const GenotypeMatrix& g = set.genotypes[c];
            for (int s = 0; s < family.num_members(); ++s) {
                const auto& obs = family.member_obs[static_cast<std::size_t>(s)];
                for (int m = 0; m < loci; ++m) {
                    const GenotypeCode gsm = g[static_cast<std::size_t>(s * loci + m)];
                    if (gsm == 1) continue;
                    const auto& o = obs[static_cast<std::size_t>(m)];
                    const double miscalls =
                        gsm == 0 ? static_cast<double>(o.variants)
                                 : static_cast<double>(o.depth - o.variants);
                    stats.reads_hom[static_cast<std::size_t>(m)] += w * o.depth;
                    stats.miscalls_hom[static_cast<std::size_t>(m)] += w * miscalls;
                }
            }
        }
        family_stats[fi] = std::move(stats);
        out.family_posteriors[fi] = std::move(post);
        out.family_log_likelihoods[fi] = family_ll;
    });

    for (std::size_t fi = 0; fi < num_families; ++fi) {
        out.stats.merge(family_stats[fi]);
        out.total_log_likelihood += out.family_log_likelihoods[fi];
    }
    return out;
}

// Closed-form maximizer of the complete-data likelihood: haplotype counts
// normalized to frequencies, and per-locus alpha = expected miscalls over
// expected homozygote reads. Loci with ~no expected homozygote reads keep
// their previous alpha and are flagged, not fatal.
inline ModelParams m_step(const SufficientStats& stats, const ModelParams& previous,
                          bool pooled_alpha = false,
                          std::vector<bool>* degenerate_out = nullptr) {
    const double total = stats.founder_draws();
    if (!(total > 0.0)) throw validation_error("no founder haplotype mass in sufficient stats");
    std::vector<double> freqs(stats.haplotype_counts.size());
    for (std::size_t h = 0; h < freqs.size(); ++h) freqs[h] = stats.haplotype_counts[h] / total;

    const std::size_t loci = stats.reads_hom.size();
    std::vector<double> alphas(loci);
    std::vector<bool> degenerate(loci, false);
    if (pooled_alpha) {
        double u = 0.0, n = 0.0;
        for (std::size_t m = 0; m < loci; ++m) {
            u += stats.miscalls_hom[m];
            n += stats.reads_hom[m];
        }
        double a;
        if (n < 1e-8) {
            degenerate.assign(loci, true);
            a = previous.errors.at(0);
        } else {
            a = std::min(u / n, 0.5 - 1e-9);
        }
        alphas.assign(loci, a);
    } else {
        for (std::size_t m = 0; m < loci; ++m) {
            if (stats.reads_hom[m] < 1e-8) {
                degenerate[m] = true;
                alphas[m] = previous.errors.at(static_cast<int>(m));
            } else {
                alphas[m] = std::min(stats.miscalls_hom[m] / stats.reads_hom[m], 0.5 - 1e-9);
            }
        }
    }
    if (degenerate_out) *degenerate_out = degenerate;
    return ModelParams{FounderFrequencies(previous.founders.num_loci(), std::move(freqs)),
                       ErrorRates(std::move(alphas))};
}

namespace detail {

inline double max_relative_change(const ModelParams& prev, const ModelParams& next) {
    double worst = 0.0;
    auto update = [&](double a, double b) {
        const double rel = std::abs(b - a) / std::max(a, 1e-12);
        if (rel > worst) worst = rel;
    };
    for (std::size_t h = 0; h < prev.founders.values().size(); ++h)
        update(prev.founders.values()[h], next.founders.values()[h]);
    for (int m = 0; m < prev.errors.num_loci(); ++m)
        update(prev.errors.at(m), next.errors.at(m));
    return worst;
}

inline bool on_boundary(const ModelParams& theta) {
    for (double f : theta.founders.values())
        if (f < 1e-9) return true;
    for (double a : theta.errors.values())
        if (a < 1e-9 || a > 0.5 - 1e-8) return true;
    return false;
}

inline ModelParams default_init(int num_loci) {
    FounderFrequencies founders =
        FounderFrequencies::independent_mafs(std::vector<double>(static_cast<std::size_t>(num_loci), 0.2));
    return ModelParams{std::move(founders),
                       ErrorRates(std::vector<double>(static_cast<std::size_t>(num_loci), 0.01))};
}

inline ModelParams random_init(int num_loci, RandomStream& rng) {
    const std::size_t h = std::size_t{1} << num_loci;
    std::vector<double> freqs(h);
    double sum = 0.0;
    for (double& f : freqs) {
        f = -std::log(1.0 - rng.uniform01()); // exponential draw -> uniform on simplex
        sum += f;
    }
    for (double& f : freqs) f /= sum;
    std::vector<double> alphas(static_cast<std::size_t>(num_loci));
    for (double& a : alphas) a = rng.uniform(0.001, 0.2);
    return ModelParams{FounderFrequencies(num_loci, std::move(freqs)), ErrorRates(std::move(alphas))};
}

struct SingleRun {
    ModelParams theta;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
    bool boundary = false;
    std::vector<bool> alpha_degenerate;
    double final_log_likelihood = -std::numeric_limits<double>::infinity();
};

inline SingleRun run_em_once(const Dataset& data, const ModelParams& init, const FitConfig& cfg,
                             ConfigurationCache& cache) {
    SingleRun run;
    run.theta = init;
    [[maybe_unused]] double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iter; ++it) {
        EStepResult e = e_step(data, run.theta, cfg.limits, &cache, cfg.threads);
        run.trace.push_back(e.total_log_likelihood);
        // classical EM guarantee, enforced in debug builds
        assert(e.total_log_likelihood >= prev_ll - 1e-9);
        prev_ll = e.total_log_likelihood;
        ModelParams next = m_step(e.stats, run.theta, cfg.pooled_alpha, &run.alpha_degenerate);
        const double change = max_relative_change(run.theta, next);
        run.theta = std::move(next);
        run.iterations = it + 1;
        if (change <= cfg.tol) {
            run.converged = true;
            break;
        }
    }
    EStepResult final_e = e_step(data, run.theta, cfg.limits, &cache, cfg.threads);
    run.final_log_likelihood = final_e.total_log_likelihood;
    run.trace.push_back(final_e.total_log_likelihood);
    run.boundary = on_boundary(run.theta);
    return run;
}

} // namespace detail

// Fits theta by EM with boundary-triggered random restarts, returning the
// highest-likelihood run (ties broken by earliest run).
inline FitReport fit(const Dataset& data, const FitConfig& cfg = {}) {
    data.validate();
    if (data.families.empty()) throw validation_error("cannot fit an empty dataset");
    if (cfg.init) {
        cfg.init->validate();
        if (cfg.init->num_loci() != data.num_loci)
            throw validation_error("initial parameters disagree with dataset locus count");
    }

    RandomStream rng = RandomStream::derive(cfg.rng_seed, {0x0f17});
    detail::ConfigurationCache cache;
    detail::SingleRun best = detail::run_em_once(
        data, cfg.init ? *cfg.init : detail::default_init(data.num_loci), cfg, cache);
    detail::SingleRun* last = &best;
    std::vector<detail::SingleRun> extra;
    extra.reserve(static_cast<std::size_t>(cfg.max_restarts));

    // A boundary solution may be a spurious local maximum: explore random
    // restarts until one corroborates it (no strict improvement) or the
    // restart budget runs out. Ties keep the earliest run.
    int restarts = 0;
    while (last->boundary && restarts < cfg.max_restarts &&
           (restarts == 0 || last->final_log_likelihood > best.final_log_likelihood + 1e-9)) {
        if (last->final_log_likelihood > best.final_log_likelihood) best = *last;
        extra.push_back(
            detail::run_em_once(data, detail::random_init(data.num_loci, rng), cfg, cache));
        last = &extra.back();
        ++restarts;
    }
    if (last != &best && last->final_log_likelihood > best.final_log_likelihood) best = *last;

    FitReport report;
    report.theta = std::move(best.theta);
    report.log_likelihood_trace = std::move(best.trace);
    report.iterations = best.iterations;
    report.restarts = restarts;
    report.converged = best.converged;
    report.boundary = best.boundary;
    report.alpha_degenerate = std::move(best.alpha_degenerate);
    return report;
}

// Appendix-style EM for parent-offspring trios at a single SNP: parental
// genotype frequencies (pi0, pi1, pi2) estimated as an unconstrained
// trinomial and one pooled error rate across individuals. Kept alongside the
// general engine as an independent route for cross-checks.
struct TrioPooledFit {
    std::array<double, 3> parent_genotype_freqs{0.0, 0.0, 0.0};
    double alpha = 0.0;
    std::vector<double> log_likelihood_trace;
    int iterations = 0;
    bool converged = false;
};

inline TrioPooledFit fit_trios_pooled(const Dataset& data, double tol = 1e-8, int max_iter = 5000) {
    data.validate();
    if (data.num_loci != 1) throw validation_error("trio closed-form EM is single-SNP only");
    for (const auto& f : data.families)
        if (f.relationship.kind() != Relationship::Kind::parent_offspring_trio)
            throw validation_error("trio closed-form EM requires trio families");

    auto mendel = [](GenotypeCode parent_a, GenotypeCode parent_b, GenotypeCode child) {
        // transmission probability of child's genotype given parents'
        auto transmit = [](GenotypeCode p, int allele) {
            if (p == 1) return 0.5;
            const int carried = p == 2 ? 1 : 0;
            return carried == allele ? 1.0 : 0.0;
        };
        double prob = 0.0;
        for (int a = 0; a <= 1; ++a) {
            const int b = static_cast<int>(child) - a;
            if (b < 0 || b > 1) continue;
            prob += transmit(parent_a, a) * transmit(parent_b, b);
        }
        return prob;
    };

    TrioPooledFit fit;
    fit.parent_genotype_freqs = {0.64, 0.32, 0.04}; // HW at MAF 0.2
    fit.alpha = 0.01;
    const double I = static_cast<double>(data.families.size());

    [[maybe_unused]] double prev_ll = -std::numeric_limits<double>::infinity();
    std::array<double, 3> pi = fit.parent_genotype_freqs;
    double alpha = fit.alpha;
    for (int it = 0; it < max_iter; ++it) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        double u = 0.0, n_hom = 0.0, total_ll = 0.0;
        for (const auto& fam : data.families) {
            double norm = 0.0;
            std::array<double, 27> post{};
            int k = 0;
            for (GenotypeCode ga = 0; ga <= 2; ++ga)
                for (GenotypeCode gb = 0; gb <= 2; ++gb)
                    for (GenotypeCode gc = 0; gc <= 2; ++gc, ++k) {
                        const double prior = pi[ga] * pi[gb] * mendel(ga, gb, gc);
                        if (prior == 0.0) continue;
                        const double ll =
                            read_log_likelihood(fam.member_obs[0][0], ga, alpha) +
                            read_log_likelihood(fam.member_obs[1][0], gb, alpha) +
                            read_log_likelihood(fam.member_obs[2][0], gc, alpha);
                        post[static_cast<std::size_t>(k)] = prior * std::exp(ll);
                        norm += post[static_cast<std::size_t>(k)];
                    }
            if (norm <= 0.0)
                throw validation_error("family " + fam.id +
                                       ": observed reads impossible under current parameters");
            total_ll += std::log(norm);
            k = 0;
            for (GenotypeCode ga = 0; ga <= 2; ++ga)
                for (GenotypeCode gb = 0; gb <= 2; ++gb)
                    for (GenotypeCode gc = 0; gc <= 2; ++gc, ++k) {
                        const double w = post[static_cast<std::size_t>(k)] / norm;
                        if (w == 0.0) continue;
                        x[ga] += w;
                        x[gb] += w;
                        const GenotypeCode gs[3] = {ga, gb, gc};
                        for (int s = 0; s < 3; ++s) {
                            if (gs[s] == 1) continue;
                            const auto& o = fam.member_obs[static_cast<std::size_t>(s)][0];
                            n_hom += w * o.depth;
                            u += w * (gs[s] == 0 ? o.variants : o.depth - o.variants);
                        }
                    }
        }
        fit.log_likelihood_trace.push_back(total_ll);
        assert(total_ll >= prev_ll - 1e-9);
        prev_ll = total_ll;

        std::array<double, 3> next_pi{x[0] / (2.0 * I), x[1] / (2.0 * I), x[2] / (2.0 * I)};
        const double next_alpha = n_hom < 1e-8 ? alpha : std::min(u / n_hom, 0.5 - 1e-9);
        double change = std::abs(next_alpha - alpha) / std::max(alpha, 1e-12);
        for (int g = 0; g < 3; ++g)
            change = std::max(change, std::abs(next_pi[static_cast<std::size_t>(g)] -
                                               pi[static_cast<std::size_t>(g)]) /
                                           std::max(pi[static_cast<std::size_t>(g)], 1e-12));
        pi = next_pi;
        alpha = next_alpha;
        fit.iterations = it + 1;
        if (change <= tol) {
            fit.converged = true;
            break;
        }
    }
    fit.parent_genotype_freqs = pi;
    fit.alpha = alpha;
    return fit;
}

} // namespace famgc
