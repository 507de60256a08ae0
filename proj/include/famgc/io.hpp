// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// File formats: tab-separated counts, pedigree, parameter, call, truth and
// panel files, plus the key/value scenario format. All files are UTF-8 with
// LF line endings and mandatory headers; '#' lines are comments except for
// the structural '#haplotypes' / '#hap' lines of parameter files.
#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "famgc/caller.hpp"
#include "famgc/em_engine.hpp"
#include "famgc/evaluation.hpp"
#include "famgc/pedigree_prior.hpp"
#include "famgc/simulator.hpp"
#include "famgc/types.hpp"

namespace famgc {

namespace io {

inline std::string fmt_fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

// Shortest exact round-trip representation.
inline std::string fmt_exact(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string> split_on(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(text.substr(start));
            return out;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

inline long long parse_int(const std::string& text, const std::string& where) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (errno != 0 || end == text.c_str() || *end != '\0')
        throw validation_error(where + ": expected an integer, got '" + text + "'");
    return v;
}

inline double parse_double(const std::string& text, const std::string& where) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end == text.c_str() || *end != '\0')
        throw validation_error(where + ": expected a number, got '" + text + "'");
    return v;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open file: " + path);
    return in;
}

} // namespace io

// ---------------------------------------------------------------------------
// Counts table

struct CountsRow {
    std::string family_id, member_id, snp_id;
    int depth = 0;
    int variants = 0;

    friend bool operator==(const CountsRow&, const CountsRow&) = default;
};

struct CountsTable {
    std::vector<CountsRow> rows;

    friend bool operator==(const CountsTable&, const CountsTable&) = default;
};

inline const std::string kCountsHeader = "family_id\tmember_id\tsnp_id\tdepth\tvariants";

inline CountsTable parse_counts(std::istream& in, const std::string& source = "counts") {
    CountsTable table;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = io::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = source + " line " + std::to_string(lineno);
        if (!header_seen) {
            if (line != kCountsHeader)
                throw validation_error(where + ": expected header '" + kCountsHeader + "'");
            header_seen = true;
            continue;
        }
        const auto fields = io::split_tabs(line);
        if (fields.size() != 5)
            throw validation_error(where + ": expected 5 tab-separated columns, got " +
                                   std::to_string(fields.size()));
        CountsRow row;
        row.family_id = fields[0];
        row.member_id = fields[1];
        row.snp_id = fields[2];
        row.depth = static_cast<int>(io::parse_int(fields[3], where + " column depth"));
        row.variants = static_cast<int>(io::parse_int(fields[4], where + " column variants"));
        if (row.depth < 0 || row.variants < 0 || row.variants > row.depth)
            throw validation_error(where + ": requires 0 <= variants <= depth, got depth=" +
                                   fields[3] + " variants=" + fields[4]);
        if (!seen.emplace(row.family_id, row.member_id, row.snp_id).second)
            throw validation_error(where + ": duplicate key (" + row.family_id + ", " +
                                   row.member_id + ", " + row.snp_id + ")");
        table.rows.push_back(std::move(row));
    }
    if (!header_seen) throw validation_error(source + ": missing header row");
    return table;
}

inline CountsTable parse_counts_file(const std::string& path) {
    auto in = io::open_or_throw(path);
    return parse_counts(in, path);
}

inline void write_counts(const CountsTable& table, std::ostream& out,
                         const std::vector<std::string>& header_comments = {}) {
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << kCountsHeader << "\n";
    for (const auto& r : table.rows)
        out << r.family_id << '\t' << r.member_id << '\t' << r.snp_id << '\t' << r.depth << '\t'
            << r.variants << "\n";
}

// ---------------------------------------------------------------------------
// Pedigree table

struct PedigreeRow {
    std::string family_id;
    Relationship relationship = Relationship::singleton();
    std::vector<std::string> member_ids;
};

struct PedigreeTable {
    std::vector<PedigreeRow> rows;
};

namespace io {

inline std::string encode_icc(const IccDistribution& dist) {
    std::string out;
    for (std::size_t e = 0; e < dist.entries.size(); ++e) {
        if (e) out += ';';
        const auto& [cfg, prob] = dist.entries[e];
        for (std::size_t i = 0; i < cfg.slot_class.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(cfg.slot_class[i]);
        }
        out += ':';
        out += fmt_exact(prob);
    }
    return out;
}

inline IccDistribution decode_icc(const std::string& text, const std::string& where) {
    IccDistribution dist;
    for (const auto& entry : split_on(text, ';')) {
        const auto parts = split_on(entry, ':');
        if (parts.size() != 2)
            throw validation_error(where + ": ICC entry '" + entry + "' is not 'classes:prob'");
        std::vector<int> slots;
        for (const auto& c : split_on(parts[0], ','))
            slots.push_back(static_cast<int>(parse_int(c, where + " ICC class")));
        dist.entries.emplace_back(IccConfiguration::of(std::move(slots)),
                                  parse_double(parts[1], where + " ICC probability"));
    }
    dist.validate();
    return dist;
}

} // namespace io

inline const std::string kPedHeaderBase = "family_id\trelationship\tmembers";

inline PedigreeTable parse_pedigree(std::istream& in, const std::string& source = "pedigree") {
    PedigreeTable table;
    std::set<std::string> family_ids;
    std::vector<std::string> header;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = io::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = source + " line " + std::to_string(lineno);
        if (header.empty()) {
            header = io::split_tabs(line);
            if (header.size() < 3 || header[0] != "family_id" || header[1] != "relationship" ||
                header[2] != "members")
                throw validation_error(where + ": header must start with '" + kPedHeaderBase + "'");
            for (std::size_t i = 3; i < header.size(); ++i)
                if (header[i] != "k0" && header[i] != "k1" && header[i] != "k2" && header[i] != "icc")
                    throw validation_error(where + ": unknown pedigree column '" + header[i] + "'");
            continue;
        }
        auto fields = io::split_tabs(line);
        if (fields.size() != header.size())
            throw validation_error(where + ": expected " + std::to_string(header.size()) +
                                   " columns, got " + std::to_string(fields.size()));
        auto column = [&](const std::string& name) -> std::optional<std::string> {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == name && !fields[i].empty()) return fields[i];
            return std::nullopt;
        };

        PedigreeRow row;
        row.family_id = fields[0];
        if (!family_ids.insert(row.family_id).second)
            throw validation_error(where + ": duplicate family_id '" + row.family_id + "'");
        row.member_ids = io::split_on(fields[2], ',');
        for (const auto& m : row.member_ids)
            if (m.empty()) throw validation_error(where + ": empty member id");

        const std::string& tag = fields[1];
        if (tag == "singleton") {
            row.relationship = Relationship::singleton();
        } else if (tag == "trio") {
            row.relationship = Relationship::trio();
        } else if (tag == "sib_pair") {
            row.relationship = Relationship::sib_pair();
        } else if (tag == "cousin_pair") {
            row.relationship = Relationship::cousin_pair();
        } else if (tag == "relative_pair") {
            const auto k0 = column("k0"), k1 = column("k1"), k2 = column("k2");
            if (!k0 || !k1 || !k2)
                throw validation_error(where + ": relative_pair needs k0, k1 and k2 columns");
            row.relationship = Relationship::relative_pair(io::parse_double(*k0, where + " k0"),
                                                           io::parse_double(*k1, where + " k1"),
                                                           io::parse_double(*k2, where + " k2"));
        } else if (tag == "nuclear") {
            const int children = static_cast<int>(row.member_ids.size()) - 2;
            if (children < 1)
                throw validation_error(where + ": nuclear needs two parents plus children");
            row.relationship = Relationship::custom(nuclear_family_icc(children),
                                                    "nuclear:" + std::to_string(children));
        } else if (tag == "custom") {
            const auto icc = column("icc");
            if (!icc) throw validation_error(where + ": custom relationship needs an icc column");
            row.relationship = Relationship::custom(io::decode_icc(*icc, where));
        } else {
            throw validation_error(where + ": unknown relationship tag '" + tag + "'");
        }
        if (static_cast<int>(row.member_ids.size()) != row.relationship.num_members())
            throw validation_error(where + ": relationship " + tag + " expects " +
                                   std::to_string(row.relationship.num_members()) +
                                   " members, got " + std::to_string(row.member_ids.size()));
        table.rows.push_back(std::move(row));
    }
    if (header.empty()) throw validation_error(source + ": missing header row");
    return table;
}

inline PedigreeTable parse_pedigree_file(const std::string& path) {
    auto in = io::open_or_throw(path);
    return parse_pedigree(in, path);
}

inline void write_pedigree(const PedigreeTable& table, std::ostream& out) {
    bool any_k = false, any_icc = false;
    for (const auto& r : table.rows) {
        if (r.relationship.kind() == Relationship::Kind::relative_pair) any_k = true;
        if (r.relationship.kind() == Relationship::Kind::custom_icc &&
            r.relationship.name().rfind("nuclear:", 0) != 0)
            any_icc = true;
    }
    out << kPedHeaderBase;
    if (any_k) out << "\tk0\tk1\tk2";
    if (any_icc) out << "\ticc";
    out << "\n";
    for (const auto& r : table.rows) {
        std::string tag;
        switch (r.relationship.kind()) {
            case Relationship::Kind::unrelated_singleton: tag = "singleton"; break;
            case Relationship::Kind::parent_offspring_trio: tag = "trio"; break;
            case Relationship::Kind::sib_pair: tag = "sib_pair"; break;
            case Relationship::Kind::first_cousin_pair: tag = "cousin_pair"; break;
            case Relationship::Kind::relative_pair: tag = "relative_pair"; break;
            case Relationship::Kind::custom_icc:
                tag = r.relationship.name().rfind("nuclear:", 0) == 0 ? "nuclear" : "custom";
                break;
        }
        out << r.family_id << '\t' << tag << '\t';
        for (std::size_t i = 0; i < r.member_ids.size(); ++i) {
            if (i) out << ',';
            out << r.member_ids[i];
        }
        if (any_k) {
            if (r.relationship.kind() == Relationship::Kind::relative_pair) {
                const auto& k = r.relationship.kinship_weights();
                out << '\t' << io::fmt_exact(k[0]) << '\t' << io::fmt_exact(k[1]) << '\t'
                    << io::fmt_exact(k[2]);
            } else {
                out << "\t\t\t";
            }
        }
        if (any_icc) {
            if (tag == "custom")
                out << '\t' << io::encode_icc(r.relationship.custom_icc());
            else
                out << '\t';
        }
        out << "\n";
    }
}

// Builds the engine dataset: SNPs ordered by id, one observation slot per
// (member, SNP); counts rows fill slots, absent pairs stay at depth 0.
inline Dataset dataset_from_tables(const CountsTable& counts, const PedigreeTable& ped) {
    Dataset data;
    std::set<std::string> snp_set;
    for (const auto& r : counts.rows) snp_set.insert(r.snp_id);
    if (snp_set.empty()) throw validation_error("counts table has no rows");
    data.snp_ids.assign(snp_set.begin(), snp_set.end());
    data.num_loci = static_cast<int>(data.snp_ids.size());
    std::map<std::string, int> snp_index;
    for (int m = 0; m < data.num_loci; ++m) snp_index[data.snp_ids[static_cast<std::size_t>(m)]] = m;

    std::map<std::string, std::pair<int, std::map<std::string, int>>> family_index;
    for (const auto& row : ped.rows) {
        Family fam;
        fam.relationship = row.relationship;
        fam.id = row.family_id;
        fam.member_ids = row.member_ids;
        fam.member_obs.assign(row.member_ids.size(),
                              std::vector<ReadObservation>(static_cast<std::size_t>(data.num_loci)));
        auto& entry = family_index[row.family_id];
        entry.first = static_cast<int>(data.families.size());
        for (std::size_t s = 0; s < row.member_ids.size(); ++s)
            entry.second[row.member_ids[s]] = static_cast<int>(s);
        data.families.push_back(std::move(fam));
    }

    for (const auto& r : counts.rows) {
        const auto fit = family_index.find(r.family_id);
        if (fit == family_index.end())
            throw validation_error("counts row references unknown family '" + r.family_id + "'");
        const auto mit = fit->second.second.find(r.member_id);
        if (mit == fit->second.second.end())
            throw validation_error("counts row references unknown member '" + r.member_id +
                                   "' of family '" + r.family_id + "'");
        Family& fam = data.families[static_cast<std::size_t>(fit->second.first)];
        fam.member_obs[static_cast<std::size_t>(mit->second)]
                      [static_cast<std::size_t>(snp_index[r.snp_id])] =
            ReadObservation{r.depth, r.variants};
    }
    data.validate();
    return data;
}

inline CountsTable counts_from_dataset(const Dataset& data) {
    CountsTable table;
    for (const auto& fam : data.families)
        for (std::size_t s = 0; s < fam.member_obs.size(); ++s)
            for (int m = 0; m < data.num_loci; ++m) {
                const auto& o = fam.member_obs[s][static_cast<std::size_t>(m)];
                table.rows.push_back(CountsRow{fam.id, fam.member_ids[s],
                                               data.snp_ids[static_cast<std::size_t>(m)], o.depth,
                                               o.variants});
            }
    std::sort(table.rows.begin(), table.rows.end(), [](const CountsRow& a, const CountsRow& b) {
        return std::tie(a.family_id, a.member_id, a.snp_id) <
               std::tie(b.family_id, b.member_id, b.snp_id);
    });
    return table;
}

// ---------------------------------------------------------------------------
// Parameter files

struct SnpParams {
    std::string snp_id;
    double maf = 0.0;
    double alpha = 0.0;
};

struct HaplotypeBlock {
    std::vector<std::string> snp_ids;
    FounderFrequencies frequencies;
};

struct ParamsFile {
    std::vector<SnpParams> snps;
    std::vector<HaplotypeBlock> blocks;
};

inline const std::string kParamsHeader = "snp_id\tmaf_hat\talpha_hat";

inline void write_params(const ParamsFile& params, std::ostream& out,
                         const std::vector<std::string>& header_comments = {}) {
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << kParamsHeader << "\n";
    for (const auto& s : params.snps)
        out << s.snp_id << '\t' << io::fmt_exact(s.maf) << '\t' << io::fmt_exact(s.alpha) << "\n";
    for (const auto& block : params.blocks) {
        out << "#haplotypes\t";
        for (std::size_t i = 0; i < block.snp_ids.size(); ++i) {
            if (i) out << ',';
            out << block.snp_ids[i];
        }
        out << "\n";
        const int m = block.frequencies.num_loci();
        for (Haplotype h = 0; h < static_cast<Haplotype>(block.frequencies.num_haplotypes()); ++h) {
            std::string pattern(static_cast<std::size_t>(m), '0');
            for (int locus = 0; locus < m; ++locus)
                if (haplotype_allele(h, locus)) pattern[static_cast<std::size_t>(locus)] = '1';
            out << "#hap\t" << pattern << '\t' << io::fmt_exact(block.frequencies.freq(h)) << "\n";
        }
    }
}

inline ParamsFile parse_params(std::istream& in, const std::string& source = "params") {
    ParamsFile params;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    std::optional<std::vector<std::string>> block_snps;
    std::map<Haplotype, double> block_freqs;

    auto finish_block = [&](const std::string& where) {
        if (!block_snps) return;
        const int m = static_cast<int>(block_snps->size());
        const std::size_t h = std::size_t{1} << m;
        if (block_freqs.size() != h)
            throw validation_error(where + ": haplotype block needs " + std::to_string(h) +
                                   " '#hap' lines, got " + std::to_string(block_freqs.size()));
        std::vector<double> freqs(h);
        for (const auto& [hap, f] : block_freqs) freqs[hap] = f;
        params.blocks.push_back(HaplotypeBlock{*block_snps, FounderFrequencies(m, std::move(freqs))});
        block_snps.reset();
        block_freqs.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        line = io::strip_cr(line);
        const std::string where = source + " line " + std::to_string(lineno);
        if (line.rfind("#haplotypes\t", 0) == 0 || line == "#haplotypes") {
            finish_block(where);
            const auto fields = io::split_tabs(line);
            if (fields.size() != 2 || fields[1].empty())
                throw validation_error(where + ": '#haplotypes' needs a comma-separated SNP list");
            auto snps = io::split_on(fields[1], ',');
            if (snps.empty() || snps.size() > 20)
                throw validation_error(where + ": haplotype block supports 1 to 20 SNPs");
            block_snps = std::move(snps);
            continue;
        }
        if (line.rfind("#hap\t", 0) == 0) {
            if (!block_snps)
                throw validation_error(where + ": '#hap' outside a '#haplotypes' block");
            const auto fields = io::split_tabs(line);
            if (fields.size() != 3)
                throw validation_error(where + ": '#hap' needs pattern and frequency");
            const std::string& pattern = fields[1];
            if (pattern.size() != block_snps->size())
                throw validation_error(where + ": pattern length does not match block SNP count");
            Haplotype h = 0;
            for (std::size_t i = 0; i < pattern.size(); ++i) {
                if (pattern[i] != '0' && pattern[i] != '1')
                    throw validation_error(where + ": pattern must be 0/1 characters");
                if (pattern[i] == '1') h |= Haplotype{1} << i;
            }
            if (!block_freqs.emplace(h, io::parse_double(fields[2], where + " frequency")).second)
                throw validation_error(where + ": duplicate haplotype pattern '" + pattern + "'");
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kParamsHeader)
                throw validation_error(where + ": expected header '" + kParamsHeader + "'");
            header_seen = true;
            continue;
        }
        const auto fields = io::split_tabs(line);
        if (fields.size() != 3)
            throw validation_error(where + ": expected 3 columns, got " +
                                   std::to_string(fields.size()));
        SnpParams sp;
        sp.snp_id = fields[0];
        sp.maf = io::parse_double(fields[1], where + " maf_hat");
        sp.alpha = io::parse_double(fields[2], where + " alpha_hat");
        if (!(sp.maf >= 0.0 && sp.maf <= 1.0))
            throw validation_error(where + ": maf_hat outside [0,1]");
        ErrorRates::check_alpha(sp.alpha);
        params.snps.push_back(std::move(sp));
    }
    finish_block(source + " end of file");
    if (!header_seen) throw validation_error(source + ": missing header row");
    return params;
}

inline ParamsFile parse_params_file(const std::string& path) {
    auto in = io::open_or_throw(path);
    return parse_params(in, path);
}

// ---------------------------------------------------------------------------
// Reference panel files

inline ReferencePanel parse_panel(std::istream& in, const std::string& source = "panel") {
    ReferencePanel panel;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = io::strip_cr(line);
        if (line.empty()) continue;
        const std::string where = source + " line " + std::to_string(lineno);
        if (!header_seen) {
            if (line.rfind("#loci", 0) != 0)
                throw validation_error(where + ": panel must start with '#loci <count>'");
            const auto fields = io::split_on(line, ' ');
            if (fields.size() != 2)
                throw validation_error(where + ": expected '#loci <count>'");
            panel.num_loci = static_cast<int>(io::parse_int(fields[1], where + " locus count"));
            header_seen = true;
            continue;
        }
        if (line[0] == '#') continue;
        if (static_cast<int>(line.size()) != panel.num_loci)
            throw validation_error(where + ": haplotype length " + std::to_string(line.size()) +
                                   " != declared locus count " + std::to_string(panel.num_loci));
        std::vector<std::uint8_t> hap(line.size());
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] != '0' && line[i] != '1')
                throw validation_error(where + ": haplotypes must be 0/1 strings");
            hap[i] = static_cast<std::uint8_t>(line[i] - '0');
        }
        panel.haplotypes.push_back(std::move(hap));
    }
    panel.validate();
    return panel;
}

inline ReferencePanel parse_panel_file(const std::string& path) {
    auto in = io::open_or_throw(path);
    return parse_panel(in, path);
}

inline void write_panel(const ReferencePanel& panel, std::ostream& out) {
    out << "#loci " << panel.num_loci << "\n";
    for (const auto& hap : panel.haplotypes) {
        std::string line(hap.size(), '0');
        for (std::size_t i = 0; i < hap.size(); ++i)
            if (hap[i]) line[i] = '1';
        out << line << "\n";
    }
}

// ---------------------------------------------------------------------------
// Call tables

struct CallRow {
    std::string family_id, member_id, snp_id;
    int call = 0;
    double p_g0 = 0.0, p_g1 = 0.0, p_g2 = 0.0;
    bool tie_flag = false;
};

inline const std::string kCallsHeader =
    "family_id\tmember_id\tsnp_id\tcall\tp_g0\tp_g1\tp_g2\ttie_flag";

// Emits rows sorted by (family_id, member_id, snp_id); probabilities are
// printed with six decimals.
inline void emit_calls(std::vector<CallRow> rows, std::ostream& out,
                       const std::vector<std::string>& header_comments = {}) {
    std::sort(rows.begin(), rows.end(), [](const CallRow& a, const CallRow& b) {
        return std::tie(a.family_id, a.member_id, a.snp_id) <
               std::tie(b.family_id, b.member_id, b.snp_id);
    });
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << kCallsHeader << "\n";
    for (const auto& r : rows)
        out << r.family_id << '\t' << r.member_id << '\t' << r.snp_id << '\t' << r.call << '\t'
            << io::fmt_fixed(r.p_g0, 6) << '\t' << io::fmt_fixed(r.p_g1, 6) << '\t'
            << io::fmt_fixed(r.p_g2, 6) << '\t' << (r.tie_flag ? 1 : 0) << "\n";
}

// Rows for one family's single-locus call.
inline void append_call_rows(std::vector<CallRow>& rows, const Family& family,
                             const std::string& snp_id, const CallResult& call) {
    for (int s = 0; s < family.num_members(); ++s) {
        CallRow row;
        row.family_id = family.id;
        row.member_id = family.member_ids[static_cast<std::size_t>(s)];
        row.snp_id = snp_id;
        row.call = call.mode_genotypes[static_cast<std::size_t>(s)];
        const auto& m = call.marginals[static_cast<std::size_t>(s)];
        row.p_g0 = m[0];
        row.p_g1 = m[1];
        row.p_g2 = m[2];
        row.tie_flag = call.tie_flag;
        rows.push_back(std::move(row));
    }
}

// ---------------------------------------------------------------------------
// Truth tables (simulator output)

inline const std::string kTruthHeader = "family_id\tmember_id\tsnp_id\tgenotype\thap1\thap2";

inline void write_truth(const Dataset& data, const TruthSet& truth, std::ostream& out,
                        const std::vector<std::string>& header_comments = {}) {
    struct Row {
        std::string family_id, member_id, snp_id;
        int genotype, hap1, hap2;
    };
    std::vector<Row> rows;
    for (std::size_t fi = 0; fi < data.families.size(); ++fi) {
        const Family& fam = data.families[fi];
        for (int s = 0; s < fam.num_members(); ++s)
            for (int m = 0; m < data.num_loci; ++m) {
                const auto& haps = truth.family_haplotypes[fi][static_cast<std::size_t>(s)];
                rows.push_back(Row{fam.id, fam.member_ids[static_cast<std::size_t>(s)],
                                   data.snp_ids[static_cast<std::size_t>(m)],
                                   static_cast<int>(truth.family_genotypes[fi][static_cast<std::size_t>(
                                       s * data.num_loci + m)]),
                                   haps[0][static_cast<std::size_t>(m)],
                                   haps[1][static_cast<std::size_t>(m)]});
            }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.family_id, a.member_id, a.snp_id) <
               std::tie(b.family_id, b.member_id, b.snp_id);
    });
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << kTruthHeader << "\n";
    for (const auto& r : rows)
        out << r.family_id << '\t' << r.member_id << '\t' << r.snp_id << '\t' << r.genotype << '\t'
            << r.hap1 << '\t' << r.hap2 << "\n";
}

inline void write_alphas(const Dataset& data, const TruthSet& truth, std::ostream& out,
                         const std::vector<std::string>& header_comments = {}) {
    for (const auto& c : header_comments) out << "# " << c << "\n";
    out << "snp_id\talpha\n";
    for (int m = 0; m < data.num_loci; ++m)
        out << data.snp_ids[static_cast<std::size_t>(m)] << '\t'
            << io::fmt_exact(truth.alphas[static_cast<std::size_t>(m)]) << "\n";
}

// ---------------------------------------------------------------------------
// Scenario files: 'key<whitespace>value' lines, '#' comments.

namespace io {

inline std::vector<double> parse_double_list(const std::string& text, const std::string& where) {
    std::vector<double> out;
    for (const auto& f : split_on(text, ',')) out.push_back(parse_double(f, where));
    return out;
}

inline std::vector<double> broadcast(std::vector<double> values, int loci,
                                     const std::string& what) {
    if (static_cast<int>(values.size()) == loci) return values;
    if (values.size() == 1) return std::vector<double>(static_cast<std::size_t>(loci), values[0]);
    throw validation_error(what + ": expected 1 or " + std::to_string(loci) + " values, got " +
                           std::to_string(values.size()));
}

inline std::string directory_of(const std::string& path) {
    const std::size_t pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

} // namespace io

inline ScenarioConfig parse_scenario(std::istream& in, const std::string& source = "scenario",
                                     const std::string& base_dir = ".") {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = io::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = source + " line " + std::to_string(lineno);
        const std::size_t split = line.find_first_of(" \t");
        if (split == std::string::npos)
            throw validation_error(where + ": expected 'key value'");
        const std::string key = line.substr(0, split);
        std::string value = line.substr(split);
        const std::size_t start = value.find_first_not_of(" \t");
        const std::size_t end = value.find_last_not_of(" \t");
        if (start == std::string::npos) throw validation_error(where + ": missing value");
        value = value.substr(start, end - start + 1);
        if (!kv.emplace(key, value).second)
            throw validation_error(where + ": duplicate key '" + key + "'");
    }

    static const std::set<std::string> known{
        "name",      "relationship", "families",   "replications", "children",
        "k0",        "k1",           "k2",         "loci",         "maf",
        "maf1",      "maf2",         "ld_r",       "ld_r2",        "pi",
        "panel",     "fixation_f",   "depth_mean", "depth_fixed",  "error_rate",
        "error_uniform", "score_members"};
    for (const auto& [key, value] : kv)
        if (!known.count(key))
            throw validation_error(source + ": unknown scenario key '" + key + "'");

    auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    auto require = [&](const std::string& key) -> std::string {
        const auto v = get(key);
        if (!v) throw validation_error(source + ": missing required key '" + key + "'");
        return *v;
    };

    ScenarioConfig config;
    if (const auto v = get("name")) config.name = *v;
    if (const auto v = get("families"))
        config.num_families = static_cast<int>(io::parse_int(*v, source + " families"));
    if (const auto v = get("replications"))
        config.replications = static_cast<int>(io::parse_int(*v, source + " replications"));

    const std::string rel = require("relationship");
    if (rel == "singleton") {
        config.relationship = Relationship::singleton();
    } else if (rel == "trio") {
        config.relationship = Relationship::trio();
    } else if (rel == "sib_pair") {
        config.relationship = Relationship::sib_pair();
    } else if (rel == "cousin_pair") {
        config.relationship = Relationship::cousin_pair();
    } else if (rel == "relative_pair") {
        config.relationship = Relationship::relative_pair(
            io::parse_double(require("k0"), source + " k0"),
            io::parse_double(require("k1"), source + " k1"),
            io::parse_double(require("k2"), source + " k2"));
    } else if (rel == "nuclear") {
        int children = 2;
        if (const auto v = get("children"))
            children = static_cast<int>(io::parse_int(*v, source + " children"));
        config.relationship =
            Relationship::custom(nuclear_family_icc(children), "nuclear:" + std::to_string(children));
    } else {
        throw validation_error(source + ": unknown relationship '" + rel + "'");
    }

    // founder model
    if (const auto v = get("panel")) {
        const std::string path = v->front() == '/' ? *v : base_dir + "/" + *v;
        config.founders = parse_panel_file(path);
    } else if (const auto piv = get("pi")) {
        const int loci = static_cast<int>(io::parse_int(require("loci"), source + " loci"));
        config.founders =
            FounderFrequencies(loci, io::parse_double_list(*piv, source + " pi"));
    } else if (get("maf1") || get("maf2")) {
        const double p1 = io::parse_double(require("maf1"), source + " maf1");
        const double p2 = io::parse_double(require("maf2"), source + " maf2");
        double r;
        if (const auto rv = get("ld_r")) {
            r = io::parse_double(*rv, source + " ld_r");
        } else {
            const double r2 = io::parse_double(require("ld_r2"), source + " ld_r2");
            if (!(r2 >= 0.0 && r2 <= 1.0))
                throw validation_error(source + ": ld_r2 must lie in [0,1]");
            r = std::sqrt(r2);
        }
        config.founders = two_snp_pi(p1, p2, r);
    } else if (const auto mv = get("maf")) {
        auto mafs = io::parse_double_list(*mv, source + " maf");
        if (const auto lv = get("loci"))
            mafs = io::broadcast(std::move(mafs), static_cast<int>(io::parse_int(*lv, source + " loci")),
                                 source + " maf");
        if (const auto fv = get("fixation_f")) {
            if (mafs.size() != 1)
                throw validation_error(source + ": fixation_f requires a single-SNP scenario");
            config.founders =
                MafFixation{mafs[0], io::parse_double(*fv, source + " fixation_f")};
        } else {
            config.founders = FounderFrequencies::independent_mafs(mafs);
        }
    } else {
        throw validation_error(source + ": specify a founder model (panel, pi, maf1/maf2 or maf)");
    }

    const int loci = config.num_loci();
    if (const auto v = get("depth_fixed")) {
        const auto means = io::broadcast(io::parse_double_list(*v, source + " depth_fixed"), loci,
                                         source + " depth_fixed");
        std::vector<int> depths;
        for (double d : means) depths.push_back(static_cast<int>(d));
        config.depth = DepthModel::fixed(std::move(depths));
    } else {
        const auto means = io::broadcast(
            io::parse_double_list(require("depth_mean"), source + " depth_mean"), loci,
            source + " depth_mean");
        config.depth = DepthModel::poisson_mean(means);
    }

    if (const auto v = get("error_uniform")) {
        const auto range = io::parse_double_list(*v, source + " error_uniform");
        if (range.size() != 2)
            throw validation_error(source + ": error_uniform needs 'lo,hi'");
        config.errors = ErrorModel::uniform(range[0], range[1]);
    } else {
        config.errors = ErrorModel::fixed_rates(io::broadcast(
            io::parse_double_list(require("error_rate"), source + " error_rate"), loci,
            source + " error_rate"));
    }

    if (const auto v = get("score_members"))
        for (const auto& s : io::split_on(*v, ','))
            config.score_members.push_back(
                static_cast<int>(io::parse_int(s, source + " score_members")));

    config.validate();
    return config;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
    auto in = io::open_or_throw(path);
    return parse_scenario(in, path, io::directory_of(path));
}

// ---------------------------------------------------------------------------
// Comparison output

inline const std::string kComparisonHeader =
    "scenario\tmethod\tsnp_id\treplications\toverall_pct\toverall_se\thet_pct\thet_se\thom_pct\t"
    "hom_se\terrors\ttotal\thet_errors\thet_total\thom_errors\thom_total";

namespace io {

inline std::string opt_pct(const std::optional<double>& v) {
    return v ? fmt_fixed(*v, 6) : std::string("NA");
}

inline double se_defined(const std::vector<std::optional<double>>& v) {
    std::vector<double> defined;
    for (const auto& x : v)
        if (x) defined.push_back(*x);
    return MethodSummary::standard_error(defined);
}

inline void comparison_lines(const ComparisonRow& row, const std::string& snp_label,
                             const MethodComparison& mc, const MethodSummary& s,
                             std::ostream& out) {
    out << row.scenario << '\t' << method_name(mc.method) << '\t' << snp_label << '\t'
        << row.replications << '\t' << fmt_fixed(s.mean_overall(), 6) << '\t'
        << fmt_fixed(s.se_overall(), 6) << '\t' << opt_pct(s.mean_het()) << '\t'
        << fmt_fixed(se_defined(s.rep_het), 6) << '\t' << opt_pct(s.mean_hom()) << '\t'
        << fmt_fixed(se_defined(s.rep_hom), 6) << '\t' << s.combined.overall.errors << '\t'
        << s.combined.overall.total << '\t' << s.combined.het.errors << '\t'
        << s.combined.het.total << '\t' << s.combined.hom.errors << '\t' << s.combined.hom.total
        << "\n";
}

} // namespace io

inline void write_comparison(const ComparisonRow& row, std::ostream& out, bool with_header = true,
                             const std::vector<std::string>& header_comments = {}) {
    for (const auto& c : header_comments) out << "# " << c << "\n";
    if (with_header) out << kComparisonHeader << "\n";
    for (const auto& mc : row.methods) {
        io::comparison_lines(row, "all", mc, mc.overall, out);
        if (row.snp_ids.size() > 1)
            for (std::size_t m = 0; m < mc.per_snp.size(); ++m)
                io::comparison_lines(row, row.snp_ids[m], mc, mc.per_snp[m], out);
    }
}

// Aligned human-readable summary.
inline void print_comparison(const ComparisonRow& row, std::ostream& out) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %-9s %-8s %10s %10s %10s %10s\n", "scenario", "method",
                  "snp", "overall%", "se", "het%", "hom%");
    out << buf;
    auto line = [&](const std::string& snp, const MethodComparison& mc, const MethodSummary& s) {
        std::snprintf(buf, sizeof buf, "%-18s %-9s %-8s %10.4f %10.4f %10s %10s\n",
                      row.scenario.c_str(), method_name(mc.method), snp.c_str(), s.mean_overall(),
                      s.se_overall(),
                      s.mean_het() ? io::fmt_fixed(*s.mean_het(), 4).c_str() : "NA",
                      s.mean_hom() ? io::fmt_fixed(*s.mean_hom(), 4).c_str() : "NA");
        out << buf;
    };
    for (const auto& mc : row.methods) {
        line("all", mc, mc.overall);
        if (row.snp_ids.size() > 1)
            for (std::size_t m = 0; m < mc.per_snp.size(); ++m)
                line(row.snp_ids[m], mc, mc.per_snp[m]);
    }
}

} // namespace famgc
