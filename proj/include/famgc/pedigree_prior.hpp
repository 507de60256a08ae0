// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Joint prior distributions of genotypes and diploid haplotypes for sets of
// relatives, expressed through IBD configuration classes: a partition of the
// members' allele slots into classes that carry the same founder haplotype.
// Conditional on a configuration, one haplotype is drawn independently per
// IBD-distinct class from the founder haplotype frequencies.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "famgc/types.hpp"

namespace famgc {

// Founder haplotype frequencies over the H = 2^M haplotypes of an M-locus
// region. For M = 1 this is (1-p, p) with p the minor allele frequency,
// which expands to Hardy-Weinberg genotype frequencies (q^2, 2pq, p^2).
class FounderFrequencies {
  public:
    FounderFrequencies() = default;

    FounderFrequencies(int num_loci, std::vector<double> freqs)
        : num_loci_(num_loci), freqs_(std::move(freqs)) {
        if (num_loci_ < 1 || num_loci_ > 20)
            throw validation_error("founder frequencies need 1 <= num_loci <= 20");
        if (freqs_.size() != (std::size_t{1} << num_loci_))
            throw validation_error("founder frequency vector must have 2^num_loci entries");
        detail::simplex_sum_or_throw(freqs_, "founder haplotype frequencies");
    }

    static FounderFrequencies from_maf(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw validation_error("MAF must lie in [0,1]");
        return FounderFrequencies(1, {1.0 - p, p});
    }

    // Product (linkage-equilibrium) frequencies from per-locus MAFs.
    static FounderFrequencies independent_mafs(const std::vector<double>& mafs) {
        const int m = static_cast<int>(mafs.size());
        if (m < 1 || m > 20) throw validation_error("need 1 to 20 per-locus MAFs");
        std::vector<double> freqs(std::size_t{1} << m, 1.0);
        for (Haplotype h = 0; h < freqs.size(); ++h)
            for (int locus = 0; locus < m; ++locus)
                freqs[h] *= haplotype_allele(h, locus) ? mafs[static_cast<std::size_t>(locus)]
                                                       : 1.0 - mafs[static_cast<std::size_t>(locus)];
        return FounderFrequencies(m, std::move(freqs));
    }

    int num_loci() const { return num_loci_; }
    int num_haplotypes() const { return static_cast<int>(freqs_.size()); }
    double freq(Haplotype h) const { return freqs_[h]; }
    const std::vector<double>& values() const { return freqs_; }

    // Marginal minor allele frequency at one locus.
    double maf(int locus) const {
        double p = 0.0;
        for (Haplotype h = 0; h < freqs_.size(); ++h)
            if (haplotype_allele(h, locus)) p += freqs_[h];
        return p;
    }

    friend bool operator==(const FounderFrequencies&, const FounderFrequencies&) = default;

  private:
    int num_loci_ = 1;
    std::vector<double> freqs_{0.5, 0.5};
};

// One IBD configuration: slot_class[k] gives, for allele slot k, the class
// whose founder haplotype it carries. Member s owns slots 2s and 2s+1.
// Class ids are canonicalized to first-occurrence order.
struct IccConfiguration {
    std::vector<int> slot_class;
    int num_distinct = 0;

    static IccConfiguration of(std::vector<int> slots) {
        if (slots.empty() || slots.size() % 2 != 0)
            throw validation_error("an IBD configuration needs a positive even slot count");
        std::vector<int> relabel(slots.size(), -1);
        int next = 0;
        for (int& c : slots) {
            if (c < 0 || c >= static_cast<int>(slots.size()))
                throw validation_error("IBD class id out of range");
            if (relabel[static_cast<std::size_t>(c)] < 0)
                relabel[static_cast<std::size_t>(c)] = next++;
            c = relabel[static_cast<std::size_t>(c)];
        }
        IccConfiguration cfg;
        cfg.slot_class = std::move(slots);
        cfg.num_distinct = next;
        return cfg;
    }

    int num_members() const { return static_cast<int>(slot_class.size()) / 2; }

    friend bool operator==(const IccConfiguration&, const IccConfiguration&) = default;
};

// Probability distribution over IBD configurations for one relationship.
struct IccDistribution {
    std::vector<std::pair<IccConfiguration, double>> entries;

    void validate() const {
        if (entries.empty()) throw validation_error("empty IBD configuration distribution");
        std::vector<double> probs;
        probs.reserve(entries.size());
        const int members = entries.front().first.num_members();
        for (const auto& [cfg, prob] : entries) {
            if (cfg.num_members() != members)
                throw validation_error("IBD configurations disagree on member count");
            probs.push_back(prob);
        }
        detail::simplex_sum_or_throw(probs, "IBD configuration probabilities");
    }

    int num_members() const { return entries.front().first.num_members(); }

    friend bool operator==(const IccDistribution&, const IccDistribution&) = default;
};

// ICC distribution of a noninbred nuclear family: parents occupy slots 0-3
// (IBD-distinct); each child draws one parental slot per parent, every
// transmission pattern equally likely.
inline IccDistribution nuclear_family_icc(int num_children) {
    if (num_children < 1 || num_children > 8)
        throw validation_error("nuclear family supports 1 to 8 children");
    IccDistribution dist;
    const int patterns = 1 << (2 * num_children);
    const double prob = 1.0 / patterns;
    for (int pat = 0; pat < patterns; ++pat) {
        std::vector<int> slots{0, 1, 2, 3};
        for (int c = 0; c < num_children; ++c) {
            const int paternal = (pat >> (2 * c)) & 1;
            const int maternal = (pat >> (2 * c + 1)) & 1;
            slots.push_back(paternal);
            slots.push_back(2 + maternal);
        }
        dist.entries.emplace_back(IccConfiguration::of(std::move(slots)), prob);
    }
    dist.validate();
    return dist;
}

// A supported relationship among the sequenced members of one family.
class Relationship {
  public:
    enum class Kind {
        unrelated_singleton,
        parent_offspring_trio,
        sib_pair,
        first_cousin_pair,
        relative_pair,
        custom_icc,
    };

    static Relationship singleton() { return Relationship(Kind::unrelated_singleton, 1); }
    // Members ordered (parent, parent, offspring).
    static Relationship trio() { return Relationship(Kind::parent_offspring_trio, 3); }
    static Relationship sib_pair() { return Relationship(Kind::sib_pair, 2); }
    static Relationship cousin_pair() { return Relationship(Kind::first_cousin_pair, 2); }

    // Generic pair sharing 0/1/2 alleles IBD with probabilities (k0,k1,k2).
    static Relationship relative_pair(double k0, double k1, double k2) {
        Relationship r(Kind::relative_pair, 2);
        r.kinship_ = {k0, k1, k2};
        detail::simplex_sum_or_throw(r.kinship_, "IBD sharing probabilities (k0,k1,k2)");
        return r;
    }

    static Relationship custom(IccDistribution icc, std::string label = "custom") {
        icc.validate();
        Relationship r(Kind::custom_icc, icc.num_members());
        r.custom_ = std::move(icc);
        r.label_ = std::move(label);
        return r;
    }

    Kind kind() const { return kind_; }
    int num_members() const { return num_members_; }
    const std::array<double, 3>& kinship_weights() const { return kinship_; }
    const IccDistribution& custom_icc() const { return custom_; }

    std::string name() const {
        switch (kind_) {
            case Kind::unrelated_singleton: return "singleton";
            case Kind::parent_offspring_trio: return "trio";
            case Kind::sib_pair: return "sib_pair";
            case Kind::first_cousin_pair: return "cousin_pair";
            case Kind::relative_pair:
                return "relative_pair(" + std::to_string(kinship_[0]) + "," +
                       std::to_string(kinship_[1]) + "," + std::to_string(kinship_[2]) + ")";
            case Kind::custom_icc: return label_;
        }
        return "unknown";
    }

    friend bool operator==(const Relationship&, const Relationship&) = default;

  private:
    Relationship(Kind kind, int members) : kind_(kind), num_members_(members) {}

    Kind kind_;
    int num_members_;
    std::array<double, 3> kinship_{0.0, 0.0, 0.0};
    IccDistribution custom_{{{IccConfiguration::of({0, 1}), 1.0}}};
    std::string label_ = "custom";
};

namespace detail {

inline IccDistribution pair_icc(double k0, double k1, double k2) {
    IccDistribution dist;
    dist.entries.emplace_back(IccConfiguration::of({0, 1, 2, 3}), k0);
    dist.entries.emplace_back(IccConfiguration::of({0, 1, 0, 2}), k1);
    dist.entries.emplace_back(IccConfiguration::of({0, 1, 0, 1}), k2);
    dist.validate();
    return dist;
}

} // namespace detail

// ICC distribution for a relationship. Sib and first-cousin sharing weights
// are relationship constants, checked against a Monte-Carlo meiosis oracle
// in the test suite.
inline IccDistribution icc_distribution(const Relationship& rel) {
    switch (rel.kind()) {
        case Relationship::Kind::unrelated_singleton: {
            IccDistribution dist;
            dist.entries.emplace_back(IccConfiguration::of({0, 1}), 1.0);
            dist.validate();
            return dist;
        }
        case Relationship::Kind::parent_offspring_trio:
            return nuclear_family_icc(1);
        case Relationship::Kind::sib_pair:
            return detail::pair_icc(0.25, 0.50, 0.25);
        case Relationship::Kind::first_cousin_pair:
            return detail::pair_icc(0.75, 0.25, 0.0);
        case Relationship::Kind::relative_pair: {
            const auto& k = rel.kinship_weights();
            return detail::pair_icc(k[0], k[1], k[2]);
        }
        case Relationship::Kind::custom_icc:
            return rel.custom_icc();
    }
    throw validation_error("unsupported relationship kind");
}

// Ordered-pair genotype prior Pr(g1, g2 | phi, p) for two relatives sharing
// phi alleles IBD at a SNP with minor allele frequency p. Summing the two
// ordered off-diagonal cells reproduces the combined unordered-row values;
// the nine ordered cells sum to 1 for each phi.
inline double pair_genotype_prior(GenotypeCode g1, GenotypeCode g2, int phi, double p) {
    if (!(p > 0.0 && p < 1.0)) throw validation_error("MAF must lie in (0,1)");
    if (g1 > 2 || g2 > 2) throw validation_error("genotype code must be 0, 1 or 2");
    if (phi < 0 || phi > 2) throw validation_error("IBD sharing count must be 0, 1 or 2");
    const double q = 1.0 - p;
    auto allele = [&](int a) { return a == 1 ? p : q; };
    auto hw = [&](GenotypeCode g) {
        return g == 0 ? q * q : (g == 1 ? 2.0 * p * q : p * p);
    };
    switch (phi) {
        case 0:
            return hw(g1) * hw(g2);
        case 1: {
            // shared allele a plus one private allele per member
            double total = 0.0;
            for (int a = 0; a <= 1; ++a) {
                const int b1 = static_cast<int>(g1) - a;
                const int b2 = static_cast<int>(g2) - a;
                if (b1 < 0 || b1 > 1 || b2 < 0 || b2 > 1) continue;
                total += allele(a) * allele(b1) * allele(b2);
            }
            return total;
        }
        default:
            return g1 == g2 ? hw(g1) : 0.0;
    }
}

struct EnumerationLimits {
    std::uint64_t max_configurations = 10'000'000;
};

// One element of the family configuration stream: a haplotype assignment to
// the IBD-distinct classes of one configuration, its induced per-member
// diploid haplotypes, and the joint prior weight Pr(phi|R) * prod freqs.
// References passed to the visitor are only valid during the call.
struct FamilyConfiguration {
    int icc_index = 0;
    double icc_prob = 0.0;
    const std::vector<Haplotype>& class_haplotypes;
    const std::vector<DiploidHaplotype>& member_diplotypes;
    double weight = 0.0;
};

namespace detail {

inline std::uint64_t configuration_count_or_throw(const IccDistribution& icc, int num_haplotypes,
                                                  const EnumerationLimits& limits,
                                                  const std::string& rel_name, int num_loci) {
    std::uint64_t total = 0;
    for (const auto& [cfg, prob] : icc.entries) {
        std::uint64_t count = 1;
        for (int c = 0; c < cfg.num_distinct; ++c) {
            count *= static_cast<std::uint64_t>(num_haplotypes);
            if (count > limits.max_configurations) break;
        }
        total += count;
        if (total > limits.max_configurations) {
            throw capacity_error("family configuration count for relationship " + rel_name +
                                 " at " + std::to_string(num_loci) + " loci exceeds cap " +
                                 std::to_string(limits.max_configurations));
        }
    }
    return total;
}

} // namespace detail

// Streams every (IBD configuration, haplotype assignment) of the family with
// its prior weight. Weights over the full stream sum to 1.
template <typename Visitor>
void for_each_family_configuration(const Relationship& rel, const FounderFrequencies& founders,
                                   const EnumerationLimits& limits, Visitor&& visit) {
    const IccDistribution icc = icc_distribution(rel);
    const int num_haps = founders.num_haplotypes();
    detail::configuration_count_or_throw(icc, num_haps, limits, rel.name(), founders.num_loci());

    const int members = icc.num_members();
    std::vector<Haplotype> class_haps;
    std::vector<DiploidHaplotype> dips(static_cast<std::size_t>(members));
    for (int e = 0; e < static_cast<int>(icc.entries.size()); ++e) {
        const auto& [cfg, icc_prob] = icc.entries[static_cast<std::size_t>(e)];
        const int d = cfg.num_distinct;
        class_haps.assign(static_cast<std::size_t>(d), 0);
        for (;;) {
            double weight = icc_prob;
            for (int c = 0; c < d; ++c) weight *= founders.freq(class_haps[static_cast<std::size_t>(c)]);
            for (int s = 0; s < members; ++s) {
                const Haplotype a = class_haps[static_cast<std::size_t>(cfg.slot_class[static_cast<std::size_t>(2 * s)])];
                const Haplotype b = class_haps[static_cast<std::size_t>(cfg.slot_class[static_cast<std::size_t>(2 * s + 1)])];
                dips[static_cast<std::size_t>(s)] = DiploidHaplotype::of(a, b);
            }
            visit(FamilyConfiguration{e, icc_prob, class_haps, dips, weight});

            // odometer over haplotype assignments
            int c = 0;
            while (c < d) {
                if (static_cast<int>(++class_haps[static_cast<std::size_t>(c)]) < num_haps) break;
                class_haps[static_cast<std::size_t>(c)] = 0;
                ++c;
            }
            if (c == d) break;
        }
    }
}

// Member-major genotype matrix: entry (member s, locus m) at index s*M + m.
using GenotypeMatrix = std::vector<GenotypeCode>;

inline GenotypeMatrix genotypes_of(const std::vector<DiploidHaplotype>& dips, int num_loci) {
    GenotypeMatrix g(dips.size() * static_cast<std::size_t>(num_loci));
    for (std::size_t s = 0; s < dips.size(); ++s)
        for (int m = 0; m < num_loci; ++m)
            g[s * static_cast<std::size_t>(num_loci) + static_cast<std::size_t>(m)] =
                dips[s].genotype_at(m);
    return g;
}

// Prior probability of a full member-major genotype matrix.
inline double family_genotype_prior(const GenotypeMatrix& genotypes, const Relationship& rel,
                                    const FounderFrequencies& founders,
                                    const EnumerationLimits& limits = {}) {
    const int num_loci = founders.num_loci();
    if (static_cast<int>(genotypes.size()) != rel.num_members() * num_loci)
        throw validation_error("genotype matrix size does not match relationship and locus count");
    for (GenotypeCode g : genotypes)
        if (g > 2) throw validation_error("genotype code must be 0, 1 or 2");

    double total = 0.0;
    for_each_family_configuration(rel, founders, limits, [&](const FamilyConfiguration& fc) {
        for (std::size_t s = 0; s < fc.member_diplotypes.size(); ++s)
            for (int m = 0; m < num_loci; ++m)
                if (fc.member_diplotypes[s].genotype_at(m) !=
                    genotypes[s * static_cast<std::size_t>(num_loci) + static_cast<std::size_t>(m)])
                    return;
        total += fc.weight;
    });
    return total;
}

} // namespace famgc
