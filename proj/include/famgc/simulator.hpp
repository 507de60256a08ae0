// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic data generation: family genotypes drawn through IBD
// configuration classes, read depths from zero-truncated Poisson or fixed
// depth models, and variant counts from the read error law. Replications
// derive independent random streams from (seed, replication, family), so
// generation order and thread schedule never change the output.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "famgc/em_engine.hpp"
#include "famgc/pedigree_prior.hpp"
#include "famgc/read_model.hpp"
#include "famgc/rng.hpp"
#include "famgc/types.hpp"

namespace famgc {

// Two-locus founder haplotype frequencies from marginal MAFs and the
// haplotype correlation r. Haplotypes are indexed with bit m = minor allele
// at locus m: index 3 = minor/minor, 1 = minor at locus 0 only, 2 = minor at
// locus 1 only, 0 = major/major.
inline FounderFrequencies two_snp_pi(double p1, double p2, double r) {
    if (!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0))
        throw validation_error("two_snp_pi needs MAFs in (0,1)");
    if (!(r >= -1.0 && r <= 1.0)) throw validation_error("correlation r must lie in [-1,1]");
    const double q1 = 1.0 - p1, q2 = 1.0 - p2;
    const double pi_both = p1 * p2 + r * std::sqrt(p1 * q1 * p2 * q2);
    const double pi_first = p1 - pi_both;  // minor at locus 0 only
    const double pi_second = p2 - pi_both; // minor at locus 1 only
    const double pi_neither = 1.0 - pi_both - pi_first - pi_second;
    std::array<std::pair<const char*, double>, 4> named{{{"minor/minor", pi_both},
                                                         {"minor/major", pi_first},
                                                         {"major/minor", pi_second},
                                                         {"major/major", pi_neither}}};
    std::vector<double> freqs(4, 0.0);
    const double slack = 4e-16;
    double clamped[4];
    for (std::size_t i = 0; i < 4; ++i) {
        double v = named[i].second;
        if (v < 0.0 && v >= -slack) v = 0.0;
        if (v > 1.0 && v <= 1.0 + slack) v = 1.0;
        if (!(v >= 0.0 && v <= 1.0))
            throw validation_error(std::string("infeasible (p1,p2,r): haplotype frequency ") +
                                   named[i].first + " = " + std::to_string(named[i].second) +
                                   " outside [0,1]");
        clamped[i] = v;
    }
    freqs[3] = clamped[0];
    freqs[1] = clamped[1];
    freqs[2] = clamped[2];
    freqs[0] = clamped[3];
    return FounderFrequencies(2, std::move(freqs));
}

// Haplotype correlation implied by an H=4 frequency vector (inverse of
// two_snp_pi, used for round-trip checks and panel summaries).
inline double two_snp_r(const FounderFrequencies& founders) {
    if (founders.num_loci() != 2) throw validation_error("two_snp_r needs a 2-locus model");
    const double p1 = founders.maf(0), p2 = founders.maf(1);
    const double denom = std::sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2));
    if (denom == 0.0) return 0.0;
    return (founders.freq(3) - p1 * p2) / denom;
}

// A phased reference panel: one haplotype per row over num_loci SNPs,
// entry 1 = minor allele.
struct ReferencePanel {
    int num_loci = 0;
    std::vector<std::vector<std::uint8_t>> haplotypes;

    void validate() const {
        if (num_loci < 1) throw validation_error("reference panel needs at least one locus");
        if (haplotypes.empty()) throw validation_error("reference panel needs at least one haplotype");
        for (const auto& h : haplotypes) {
            if (static_cast<int>(h.size()) != num_loci)
                throw validation_error("reference panel haplotype length != num_loci");
            for (auto a : h)
                if (a > 1) throw validation_error("reference panel alleles must be 0 or 1");
        }
    }

    double maf(int locus) const {
        double sum = 0.0;
        for (const auto& h : haplotypes) sum += h[static_cast<std::size_t>(locus)];
        return sum / static_cast<double>(haplotypes.size());
    }

    // Empirical haplotype frequencies over a subset of loci (at most 20).
    FounderFrequencies frequencies(const std::vector<int>& loci) const {
        if (loci.empty() || loci.size() > 20)
            throw validation_error("panel frequency extraction supports 1 to 20 loci");
        std::vector<double> freqs(std::size_t{1} << loci.size(), 0.0);
        for (const auto& h : haplotypes) {
            Haplotype packed = 0;
            for (std::size_t m = 0; m < loci.size(); ++m)
                packed |= static_cast<Haplotype>(h[static_cast<std::size_t>(loci[m])]) << m;
            freqs[packed] += 1.0;
        }
        for (double& f : freqs) f /= static_cast<double>(haplotypes.size());
        return FounderFrequencies(static_cast<int>(loci.size()), std::move(freqs));
    }
};

// Single-SNP founder genotype law with fixation index F: genotype
// probabilities (q^2+Fpq, 2pq(1-F), p^2+Fpq). F=0 is Hardy-Weinberg;
// F>0 gives excess homozygosity, F<0 excess heterozygosity.
struct MafFixation {
    double maf = 0.1;
    double f = 0.0;

    void validate() const {
        if (!(maf > 0.0 && maf < 1.0)) throw validation_error("fixation model needs MAF in (0,1)");
        const double p = maf, q = 1.0 - maf;
        const double lower = -std::min(p / q, q / p);
        if (!(f > lower && f <= 1.0))
            throw validation_error("fixation index F must lie in (-min(p/q,q/p), 1]");
    }

    std::array<double, 3> genotype_probs() const {
        const double p = maf, q = 1.0 - maf;
        return {q * q + f * p * q, 2.0 * p * q * (1.0 - f), p * p + f * p * q};
    }
};

using FounderModel = std::variant<FounderFrequencies, ReferencePanel, MafFixation>;

inline int founder_model_num_loci(const FounderModel& model) {
    if (const auto* f = std::get_if<FounderFrequencies>(&model)) return f->num_loci();
    if (const auto* p = std::get_if<ReferencePanel>(&model)) return p->num_loci;
    return 1;
}

// One founder diplotype draw (packed haplotypes; panel models need <= 20
// loci for packing). Haplotype-frequency and panel models draw the two
// haplotypes independently; the fixation model couples them through F.
inline DiploidHaplotype sample_founder_diplotype(const FounderModel& model, RandomStream& rng) {
    if (const auto* freqs = std::get_if<FounderFrequencies>(&model)) {
        const auto a = static_cast<Haplotype>(rng.categorical(freqs->values()));
        const auto b = static_cast<Haplotype>(rng.categorical(freqs->values()));
        return DiploidHaplotype::of(a, b);
    }
    if (const auto* panel = std::get_if<ReferencePanel>(&model)) {
        if (panel->num_loci > 20)
            throw capacity_error("packed diplotype draws support at most 20 panel loci");
        auto pack = [&](const std::vector<std::uint8_t>& row) {
            Haplotype h = 0;
            for (std::size_t m = 0; m < row.size(); ++m)
                h |= static_cast<Haplotype>(row[m]) << m;
            return h;
        };
        const auto& rows = panel->haplotypes;
        const Haplotype a = pack(rows[rng.uniform_below(rows.size())]);
        const Haplotype b = pack(rows[rng.uniform_below(rows.size())]);
        return DiploidHaplotype::of(a, b);
    }
    const auto& fx = std::get<MafFixation>(model);
    fx.validate();
    const auto probs = fx.genotype_probs();
    const int g = rng.categorical({probs[0], probs[1], probs[2]});
    return g == 0 ? DiploidHaplotype{0, 0} : (g == 1 ? DiploidHaplotype{0, 1} : DiploidHaplotype{1, 1});
}

// True per-member phased haplotypes of one simulated family, as allele
// vectors so wide panels are supported uniformly.
struct SimulatedFamily {
    std::vector<std::array<std::vector<std::uint8_t>, 2>> member_haplotypes;
    GenotypeMatrix genotypes; // member-major, s*M + m

    int num_members() const { return static_cast<int>(member_haplotypes.size()); }
};

namespace detail {

inline std::vector<std::uint8_t> haplotype_bits(Haplotype h, int num_loci) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(num_loci));
    for (int m = 0; m < num_loci; ++m)
        bits[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(haplotype_allele(h, m));
    return bits;
}

inline std::vector<std::uint8_t> sample_founder_haplotype(const FounderModel& model,
                                                          RandomStream& rng) {
    if (const auto* freqs = std::get_if<FounderFrequencies>(&model)) {
        const auto h = static_cast<Haplotype>(rng.categorical(freqs->values()));
        return haplotype_bits(h, freqs->num_loci());
    }
    const auto& panel = std::get<ReferencePanel>(model);
    return panel.haplotypes[rng.uniform_below(panel.haplotypes.size())];
}

inline SimulatedFamily assemble_family(const std::vector<std::array<std::vector<std::uint8_t>, 2>>& haps,
                                       int num_loci) {
    SimulatedFamily fam;
    fam.member_haplotypes = haps;
    fam.genotypes.resize(haps.size() * static_cast<std::size_t>(num_loci));
    for (std::size_t s = 0; s < haps.size(); ++s)
        for (int m = 0; m < num_loci; ++m)
            fam.genotypes[s * static_cast<std::size_t>(num_loci) + static_cast<std::size_t>(m)] =
                static_cast<GenotypeCode>(haps[s][0][static_cast<std::size_t>(m)] +
                                          haps[s][1][static_cast<std::size_t>(m)]);
    return fam;
}

// Pedigree-explicit generation for the fixation-index model (M = 1):
// founder diplotypes carry the F-coupling, descendants follow Mendelian
// transmission. Only pedigrees with an explicit founder structure qualify.
inline SimulatedFamily simulate_family_fixation(const Relationship& rel, const MafFixation& fx,
                                                RandomStream& rng) {
    using Hap = std::vector<std::uint8_t>;
    auto founder = [&]() -> std::array<Hap, 2> {
        const DiploidHaplotype d = sample_founder_diplotype(FounderModel{fx}, rng);
        return {haplotype_bits(d.first, 1), haplotype_bits(d.second, 1)};
    };
    auto child_of = [&](const std::array<Hap, 2>& a, const std::array<Hap, 2>& b) -> std::array<Hap, 2> {
        return {a[rng.uniform_below(2)], b[rng.uniform_below(2)]};
    };
    switch (rel.kind()) {
        case Relationship::Kind::unrelated_singleton:
            return assemble_family({founder()}, 1);
        case Relationship::Kind::parent_offspring_trio: {
            const auto p1 = founder(), p2 = founder();
            return assemble_family({p1, p2, child_of(p1, p2)}, 1);
        }
        case Relationship::Kind::sib_pair: {
            const auto p1 = founder(), p2 = founder();
            return assemble_family({child_of(p1, p2), child_of(p1, p2)}, 1);
        }
        case Relationship::Kind::first_cousin_pair: {
            const auto g1 = founder(), g2 = founder();
            const auto sib1 = child_of(g1, g2), sib2 = child_of(g1, g2);
            const auto spouse1 = founder(), spouse2 = founder();
            return assemble_family({child_of(sib1, spouse1), child_of(sib2, spouse2)}, 1);
        }
        default:
            throw validation_error(
                "fixation-index simulation needs an explicit pedigree (singleton, trio, sib or "
                "cousin pair), not " +
                rel.name());
    }
}

} // namespace detail

// Draws one family's true haplotypes: an IBD configuration from the
// relationship, then one independent founder haplotype per IBD-distinct
// class. The fixation model routes through explicit pedigree transmission.
inline SimulatedFamily simulate_family(const Relationship& rel, const FounderModel& model,
                                       RandomStream& rng) {
    if (const auto* fx = std::get_if<MafFixation>(&model))
        return detail::simulate_family_fixation(rel, *fx, rng);

    const int num_loci = founder_model_num_loci(model);
    const IccDistribution icc = icc_distribution(rel);
    std::vector<double> probs;
    probs.reserve(icc.entries.size());
    for (const auto& [cfg, prob] : icc.entries) probs.push_back(prob);
    const IccConfiguration& cfg = icc.entries[static_cast<std::size_t>(rng.categorical(probs))].first;

    std::vector<std::vector<std::uint8_t>> class_haps(static_cast<std::size_t>(cfg.num_distinct));
    for (auto& h : class_haps) h = detail::sample_founder_haplotype(model, rng);

    std::vector<std::array<std::vector<std::uint8_t>, 2>> members(
        static_cast<std::size_t>(cfg.num_members()));
    for (int s = 0; s < cfg.num_members(); ++s) {
        members[static_cast<std::size_t>(s)] = {
            class_haps[static_cast<std::size_t>(cfg.slot_class[static_cast<std::size_t>(2 * s)])],
            class_haps[static_cast<std::size_t>(cfg.slot_class[static_cast<std::size_t>(2 * s + 1)])]};
    }
    return detail::assemble_family(members, num_loci);
}

// Per-locus read depth law.
struct DepthModel {
    enum class Kind { zero_truncated_poisson, fixed };
    Kind kind = Kind::zero_truncated_poisson;
    std::vector<double> mean;  // per locus, Poisson model
    std::vector<int> depth;    // per locus, fixed model

    static DepthModel poisson_mean(std::vector<double> mu) {
        DepthModel d;
        d.kind = Kind::zero_truncated_poisson;
        d.mean = std::move(mu);
        return d;
    }
    static DepthModel fixed(std::vector<int> n) {
        DepthModel d;
        d.kind = Kind::fixed;
        d.depth = std::move(n);
        return d;
    }

    int num_loci() const {
        return static_cast<int>(kind == Kind::fixed ? depth.size() : mean.size());
    }

    void validate() const {
        if (kind == Kind::zero_truncated_poisson) {
            if (mean.empty()) throw validation_error("depth model needs per-locus means");
            for (double m : mean)
                if (!(m > 0.0)) throw validation_error("Poisson depth mean must be > 0");
        } else {
            if (depth.empty()) throw validation_error("depth model needs per-locus depths");
            for (int n : depth)
                if (n < 1) throw validation_error("fixed depth must be >= 1");
        }
    }
};

// Per-locus read error law: fixed rates, or one uniform draw per SNP per
// replication.
struct ErrorModel {
    enum class Kind { fixed, uniform_per_snp };
    Kind kind = Kind::fixed;
    std::vector<double> alpha; // per locus, fixed model
    double lo = 0.001, hi = 0.1;

    static ErrorModel fixed_rates(std::vector<double> a) {
        ErrorModel e;
        e.kind = Kind::fixed;
        e.alpha = std::move(a);
        return e;
    }
    static ErrorModel uniform(double lo, double hi) {
        ErrorModel e;
        e.kind = Kind::uniform_per_snp;
        e.lo = lo;
        e.hi = hi;
        return e;
    }

    void validate(int num_loci) const {
        if (kind == Kind::fixed) {
            if (static_cast<int>(alpha.size()) != num_loci)
                throw validation_error("error model needs one rate per locus");
            for (double a : alpha) ErrorRates::check_alpha(a);
        } else {
            if (!(lo >= 0.0 && lo <= hi && hi < 0.5))
                throw validation_error("uniform error range needs 0 <= lo <= hi < 0.5");
        }
    }
};

struct ScenarioConfig {
    std::string name = "scenario";
    Relationship relationship = Relationship::sib_pair();
    int num_families = 100;
    FounderModel founders = FounderFrequencies::from_maf(0.1);
    DepthModel depth = DepthModel::poisson_mean({10.0});
    ErrorModel errors;
    int replications = 200; // desk-scale default
    std::vector<int> score_members; // member indices counted when scoring; empty = all

    int num_loci() const { return founder_model_num_loci(founders); }

    void validate() const {
        if (num_families < 1) throw validation_error("scenario needs at least one family");
        if (replications < 1) throw validation_error("scenario needs at least one replication");
        const int loci = num_loci();
        depth.validate();
        if (depth.num_loci() != loci)
            throw validation_error("depth model locus count does not match founder model");
        errors.validate(loci);
        if (const auto* p = std::get_if<ReferencePanel>(&founders)) p->validate();
        if (const auto* fx = std::get_if<MafFixation>(&founders)) fx->validate();
        for (int s : score_members)
            if (s < 0 || s >= relationship.num_members())
                throw validation_error("score_members index out of range");
    }
};

// True states behind one simulated replication.
struct TruthSet {
    std::vector<GenotypeMatrix> family_genotypes; // member-major S x M
    std::vector<std::vector<std::array<std::vector<std::uint8_t>, 2>>> family_haplotypes;
    std::vector<double> alphas; // realized per-locus error rates

    friend bool operator==(const TruthSet&, const TruthSet&) = default;
};

struct Replication {
    Dataset dataset;
    TruthSet truth;
};

// Per-locus reads for one member given its genotypes and realized rates.
inline std::vector<ReadObservation> simulate_reads(const std::vector<GenotypeCode>& genotypes,
                                                   const DepthModel& depth,
                                                   const std::vector<double>& alphas,
                                                   RandomStream& rng) {
    depth.validate();
    const int loci = depth.num_loci();
    if (static_cast<int>(genotypes.size()) != loci ||
        static_cast<int>(alphas.size()) != loci)
        throw validation_error("simulate_reads: genotype, depth and error lengths disagree");
    std::vector<ReadObservation> obs(static_cast<std::size_t>(loci));
    for (int m = 0; m < loci; ++m) {
        const int n = depth.kind == DepthModel::Kind::fixed
                          ? depth.depth[static_cast<std::size_t>(m)]
                          : rng.zero_truncated_poisson(depth.mean[static_cast<std::size_t>(m)]);
        const GenotypeCode g = genotypes[static_cast<std::size_t>(m)];
        const double a = alphas[static_cast<std::size_t>(m)];
        const double p_variant = g == 0 ? a : (g == 1 ? 0.5 : 1.0 - a);
        obs[static_cast<std::size_t>(m)] = ReadObservation{n, rng.binomial(n, p_variant)};
    }
    return obs;
}

// One replication, fully determined by (config, seed, replication index).
// Realized per-SNP error rates draw from the stream (seed, k, 0); family i
// draws from (seed, k, 1 + i).
inline Replication run_scenario(const ScenarioConfig& config, std::uint64_t seed, int replication) {
    config.validate();
    const int loci = config.num_loci();

    std::vector<double> alphas;
    if (config.errors.kind == ErrorModel::Kind::fixed) {
        alphas = config.errors.alpha;
    } else {
        RandomStream alpha_rng =
            RandomStream::derive(seed, {static_cast<std::uint64_t>(replication), 0});
        alphas.resize(static_cast<std::size_t>(loci));
        for (double& a : alphas) a = alpha_rng.uniform(config.errors.lo, config.errors.hi);
    }

    Replication rep;
    rep.dataset.num_loci = loci;
    rep.dataset.snp_ids.resize(static_cast<std::size_t>(loci));
    for (int m = 0; m < loci; ++m) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%04d", m);
        rep.dataset.snp_ids[static_cast<std::size_t>(m)] = buf;
    }
    rep.truth.alphas = alphas;

    const int members = config.relationship.num_members();
    for (int i = 0; i < config.num_families; ++i) {
        RandomStream rng = RandomStream::derive(
            seed, {static_cast<std::uint64_t>(replication), 1 + static_cast<std::uint64_t>(i)});
        SimulatedFamily sim = simulate_family(config.relationship, config.founders, rng);

        Family fam;
        fam.relationship = config.relationship;
        char buf[16];
        std::snprintf(buf, sizeof buf, "F%05d", i);
        fam.id = buf;
        for (int s = 0; s < members; ++s) {
            std::snprintf(buf, sizeof buf, "M%d", s + 1);
            fam.member_ids.push_back(buf);
            std::vector<GenotypeCode> g(static_cast<std::size_t>(loci));
            for (int m = 0; m < loci; ++m)
                g[static_cast<std::size_t>(m)] =
                    sim.genotypes[static_cast<std::size_t>(s * loci + m)];
            fam.member_obs.push_back(simulate_reads(g, config.depth, alphas, rng));
        }
        rep.dataset.families.push_back(std::move(fam));
        rep.truth.family_genotypes.push_back(sim.genotypes);
        rep.truth.family_haplotypes.push_back(std::move(sim.member_haplotypes));
    }
    return rep;
}

} // namespace famgc
