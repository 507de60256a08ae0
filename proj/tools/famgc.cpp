// Copyright (c) 2026 famgc contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: simulate, fit, call, ld-pipeline and evaluate
// workflows over tab-separated files. Exit codes: 0 success, 1 validation
// error, 2 non-convergence (partial output written with a warning).
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "famgc/caller.hpp"
#include "famgc/em_engine.hpp"
#include "famgc/evaluation.hpp"
#include "famgc/io.hpp"
#include "famgc/parallel.hpp"
#include "famgc/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNonConvergence = 2;

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw famgc::validation_error("cannot open output file: " + path);
    return out;
}

famgc::Dataset load_dataset(const std::string& counts_path, const std::string& ped_path) {
    const famgc::CountsTable counts = famgc::parse_counts_file(counts_path);
    const famgc::PedigreeTable ped = famgc::parse_pedigree_file(ped_path);
    return famgc::dataset_from_tables(counts, ped);
}

struct CommonFitFlags {
    double tol = 1e-8;
    int max_iter = 5000;
    int max_restarts = 5;
    std::uint64_t seed = 1;

    famgc::FitConfig to_config() const {
        famgc::FitConfig cfg;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        cfg.max_restarts = max_restarts;
        cfg.rng_seed = seed;
        return cfg;
    }
};

void add_fit_flags(CLI::App* cmd, CommonFitFlags& flags) {
    cmd->add_option("--tol", flags.tol, "EM relative-change convergence tolerance");
    cmd->add_option("--max-iter", flags.max_iter, "maximum EM iterations per run");
    cmd->add_option("--restarts", flags.max_restarts, "maximum random restarts on boundary fits");
    cmd->add_option("--seed", flags.seed, "seed for restart initialization");
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& prefix,
                 int threads) {
    const famgc::ScenarioConfig config = famgc::parse_scenario_file(config_path);
    const int reps = config.replications;

    std::vector<famgc::Replication> replications(static_cast<std::size_t>(reps));
    famgc::parallel_for(reps, threads, [&](int k) {
        replications[static_cast<std::size_t>(k)] = famgc::run_scenario(config, seed, k);
    });

    const std::vector<std::string> headers{"seed=" + std::to_string(seed),
                                           "scenario=" + config.name};
    {
        famgc::PedigreeTable ped;
        for (const auto& fam : replications[0].dataset.families)
            ped.rows.push_back(famgc::PedigreeRow{fam.id, fam.relationship, fam.member_ids});
        auto out = open_output(prefix + ".ped.tsv");
        for (const auto& h : headers) out << "# " << h << "\n";
        famgc::write_pedigree(ped, out);
    }
    for (int k = 0; k < reps; ++k) {
        const auto& rep = replications[static_cast<std::size_t>(k)];
        char num[16];
        std::snprintf(num, sizeof num, "r%04d", k);
        const std::string tag = prefix + "." + num;
        std::vector<std::string> rep_headers = headers;
        rep_headers.push_back("replication=" + std::to_string(k));
        {
            auto out = open_output(tag + ".counts.tsv");
            famgc::write_counts(famgc::counts_from_dataset(rep.dataset), out, rep_headers);
        }
        {
            auto out = open_output(tag + ".truth.tsv");
            famgc::write_truth(rep.dataset, rep.truth, out, rep_headers);
        }
        {
            auto out = open_output(tag + ".alphas.tsv");
            famgc::write_alphas(rep.dataset, rep.truth, out, rep_headers);
        }
    }
    std::fprintf(stderr, "simulate: wrote %d replication(s) to %s.*\n", reps, prefix.c_str());
    return kExitOk;
}

int cmd_fit(const std::string& counts_path, const std::string& ped_path,
            const std::string& loci_csv, const CommonFitFlags& flags, bool pooled_alpha,
            const std::string& out_path, int threads) {
    const famgc::Dataset data = load_dataset(counts_path, ped_path);
    famgc::ParamsFile params;
    bool all_converged = true;

    if (!loci_csv.empty()) {
        std::vector<int> loci;
        for (const auto& id : famgc::io::split_on(loci_csv, ',')) {
            const auto it = std::find(data.snp_ids.begin(), data.snp_ids.end(), id);
            if (it == data.snp_ids.end())
                throw famgc::validation_error("--loci names unknown snp_id '" + id + "'");
            const int index = static_cast<int>(it - data.snp_ids.begin());
            if (std::find(loci.begin(), loci.end(), index) != loci.end())
                throw famgc::validation_error("--loci lists snp_id '" + id + "' twice");
            loci.push_back(index);
        }
        if (loci.size() < 2 || loci.size() > 3)
            throw famgc::validation_error("--loci expects 2 or 3 SNP ids for a joint fit");
        const famgc::Dataset view = data.loci_view(loci);
        famgc::FitConfig cfg = flags.to_config();
        cfg.pooled_alpha = pooled_alpha;
        cfg.threads = threads;
        const famgc::FitReport report = famgc::fit(view, cfg);
        all_converged = report.converged;
        famgc::HaplotypeBlock block{view.snp_ids, report.theta.founders};
        for (std::size_t m = 0; m < view.snp_ids.size(); ++m)
            params.snps.push_back(famgc::SnpParams{view.snp_ids[m],
                                                   report.theta.founders.maf(static_cast<int>(m)),
                                                   report.theta.errors.at(static_cast<int>(m))});
        params.blocks.push_back(std::move(block));
    } else {
        params.snps.resize(static_cast<std::size_t>(data.num_loci));
        std::vector<bool> converged(static_cast<std::size_t>(data.num_loci), true);
        famgc::parallel_for(data.num_loci, threads, [&](int m) {
            famgc::FitConfig cfg = flags.to_config();
            cfg.pooled_alpha = pooled_alpha;
            cfg.rng_seed = famgc::detail::derived_fit_seed(flags.seed, 1,
                                                           static_cast<std::uint64_t>(m));
            const famgc::FitReport report = famgc::fit(data.locus_view(m), cfg);
            params.snps[static_cast<std::size_t>(m)] =
                famgc::SnpParams{data.snp_ids[static_cast<std::size_t>(m)],
                                 report.theta.founders.maf(0), report.theta.errors.at(0)};
            converged[static_cast<std::size_t>(m)] = report.converged;
        });
        for (std::size_t m = 0; m < converged.size(); ++m)
            if (!converged[m]) {
                all_converged = false;
                std::fprintf(stderr, "warning: EM did not converge for snp %s\n",
                             data.snp_ids[m].c_str());
            }
    }

    auto out = open_output(out_path);
    famgc::write_params(params, out,
                        {"seed=" + std::to_string(flags.seed),
                         "converged=" + std::string(all_converged ? "1" : "0")});
    if (!all_converged) {
        std::fprintf(stderr, "warning: non-convergence; partial estimates written to %s\n",
                     out_path.c_str());
        return kExitNonConvergence;
    }
    return kExitOk;
}

int cmd_call(const std::string& counts_path, const std::string& ped_path,
             const std::string& params_path, const std::string& panel_path,
             const std::string& out_path) {
    const famgc::Dataset data = load_dataset(counts_path, ped_path);
    const famgc::ParamsFile params = famgc::parse_params_file(params_path);

    std::map<std::string, famgc::SnpParams> by_id;
    for (const auto& s : params.snps) by_id[s.snp_id] = s;
    auto alpha_of = [&](const std::string& id) {
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw famgc::validation_error("params file has no row for snp '" + id + "'");
        return it->second.alpha;
    };

    std::vector<famgc::CallRow> rows;
    famgc::CallOptions call_opts;

    // Joint groups: the whole region when a panel supplies pi, otherwise the
    // params file's haplotype blocks; remaining SNPs are called one by one.
    std::vector<std::pair<std::vector<int>, famgc::FounderFrequencies>> groups;
    std::set<int> grouped;
    if (!panel_path.empty()) {
        const famgc::ReferencePanel panel = famgc::parse_panel_file(panel_path);
        if (panel.num_loci != data.num_loci)
            throw famgc::validation_error(
                "panel locus count " + std::to_string(panel.num_loci) +
                " does not match counts file SNP count " + std::to_string(data.num_loci) +
                " (panel loci map positionally onto SNP ids in sorted order)");
        if (data.num_loci > 3)
            throw famgc::capacity_error("panel-based joint calling supports at most 3 SNPs");
        std::vector<int> all(static_cast<std::size_t>(data.num_loci));
        for (int m = 0; m < data.num_loci; ++m) all[static_cast<std::size_t>(m)] = m;
        groups.emplace_back(all, panel.frequencies(all));
        for (int m : all) grouped.insert(m);
    } else {
        for (const auto& block : params.blocks) {
            std::vector<int> loci;
            for (const auto& id : block.snp_ids) {
                const auto it = std::find(data.snp_ids.begin(), data.snp_ids.end(), id);
                if (it == data.snp_ids.end())
                    throw famgc::validation_error("haplotype block names unknown snp '" + id + "'");
                loci.push_back(static_cast<int>(it - data.snp_ids.begin()));
            }
            for (int m : loci)
                if (!grouped.insert(m).second)
                    throw famgc::validation_error("snp '" +
                                                  data.snp_ids[static_cast<std::size_t>(m)] +
                                                  "' appears in more than one haplotype block");
            groups.emplace_back(std::move(loci), block.frequencies);
        }
    }

    for (const auto& [loci, founders] : groups) {
        const famgc::Dataset view = data.loci_view(loci);
        std::vector<double> alphas;
        for (const auto& id : view.snp_ids) alphas.push_back(alpha_of(id));
        const famgc::ModelParams theta{founders, famgc::ErrorRates(alphas)};
        famgc::detail::ConfigurationCache cache;
        for (const auto& family : view.families) {
            const famgc::CallResult call = famgc::call_family(family, theta, call_opts, &cache);
            for (int s = 0; s < family.num_members(); ++s)
                for (std::size_t m = 0; m < view.snp_ids.size(); ++m) {
                    famgc::CallRow row;
                    row.family_id = family.id;
                    row.member_id = family.member_ids[static_cast<std::size_t>(s)];
                    row.snp_id = view.snp_ids[m];
                    const std::size_t idx =
                        static_cast<std::size_t>(s) * view.snp_ids.size() + m;
                    row.call = call.mode_genotypes[idx];
                    row.p_g0 = call.marginals[idx][0];
                    row.p_g1 = call.marginals[idx][1];
                    row.p_g2 = call.marginals[idx][2];
                    row.tie_flag = call.tie_flag;
                    rows.push_back(std::move(row));
                }
        }
    }

    for (int m = 0; m < data.num_loci; ++m) {
        if (grouped.count(m)) continue;
        const std::string& id = data.snp_ids[static_cast<std::size_t>(m)];
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw famgc::validation_error("params file has no row for snp '" + id + "'");
        const famgc::ModelParams theta{famgc::FounderFrequencies::from_maf(it->second.maf),
                                       famgc::ErrorRates({it->second.alpha})};
        const famgc::Dataset view = data.locus_view(m);
        famgc::detail::ConfigurationCache cache;
        for (const auto& family : view.families) {
            const famgc::CallResult call = famgc::call_family(family, theta, call_opts, &cache);
            famgc::append_call_rows(rows, family, id, call);
        }
    }

    auto out = open_output(out_path);
    famgc::emit_calls(std::move(rows), out, {"params=" + params_path});
    return kExitOk;
}

int cmd_ld_pipeline(const std::string& counts_path, const std::string& ped_path, double min_r2,
                    double lambda, const CommonFitFlags& flags, const std::string& out_path,
                    int threads) {
    const famgc::Dataset data = load_dataset(counts_path, ped_path);
    famgc::LdPipelineConfig cfg;
    cfg.partner.min_r2 = min_r2;
    cfg.partner.lambda = lambda;
    cfg.fit = flags.to_config();
    cfg.threads = threads;
    const famgc::LdPipelineResult result = famgc::ld_pipeline(data, cfg);

    std::vector<std::string> headers{"seed=" + std::to_string(flags.seed),
                                     "min_r2=" + famgc::io::fmt_exact(min_r2),
                                     "lambda=" + famgc::io::fmt_exact(lambda)};
    for (int m = 0; m < data.num_loci; ++m) {
        const auto& partner = result.partners[static_cast<std::size_t>(m)];
        if (!partner) continue;
        headers.push_back("partner\t" + data.snp_ids[static_cast<std::size_t>(m)] + "\t" +
                          data.snp_ids[static_cast<std::size_t>(partner->partner)] + "\tr=" +
                          famgc::io::fmt_fixed(partner->r, 6));
    }

    std::vector<famgc::CallRow> rows;
    for (int m = 0; m < data.num_loci; ++m)
        for (std::size_t fi = 0; fi < data.families.size(); ++fi)
            famgc::append_call_rows(rows, data.families[fi],
                                    data.snp_ids[static_cast<std::size_t>(m)],
                                    result.final_calls[static_cast<std::size_t>(m)][fi]);

    auto out = open_output(out_path);
    famgc::emit_calls(std::move(rows), out, headers);
    if (!result.all_converged) {
        std::fprintf(stderr, "warning: non-convergence in at least one fit; calls written to %s\n",
                     out_path.c_str());
        return kExitNonConvergence;
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& scenario_path, const std::string& methods_csv, int reps,
                 std::uint64_t seed, double min_r2, double lambda, const std::string& out_path,
                 int threads) {
    const famgc::ScenarioConfig config = famgc::parse_scenario_file(scenario_path);
    std::vector<famgc::Method> methods;
    for (const auto& name : famgc::io::split_on(methods_csv, ','))
        methods.push_back(famgc::parse_method(name));
    const int replications = reps > 0 ? reps : config.replications;

    famgc::EvalOptions options;
    options.partner.min_r2 = min_r2;
    options.partner.lambda = lambda;
    options.threads = threads;
    const famgc::ComparisonRow row =
        famgc::run_comparison(config, methods, replications, seed, options);

    auto out = open_output(out_path);
    famgc::write_comparison(row, out, true,
                            {"seed=" + std::to_string(seed), "scenario_file=" + scenario_path});
    famgc::print_comparison(row, std::cout);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"famgc: genotype calling from read counts with pedigree and LD priors"};
    app.require_subcommand(1);
    int threads = famgc::default_thread_count();
    app.add_option("--threads", threads, "maximum worker threads")->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate synthetic read-count datasets");
    std::string sim_config, sim_prefix;
    std::uint64_t sim_seed = 1;
    sim->add_option("--config", sim_config, "scenario file")->required();
    sim->add_option("--seed", sim_seed, "root random seed")->capture_default_str();
    sim->add_option("--out-prefix", sim_prefix, "output path prefix")->required();

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "estimate MAF / haplotype frequencies and error rates");
    std::string fit_counts, fit_ped, fit_loci, fit_out;
    bool fit_pooled = false;
    CommonFitFlags fit_flags;
    fit_cmd->add_option("--counts", fit_counts, "counts TSV")->required();
    fit_cmd->add_option("--ped", fit_ped, "pedigree TSV")->required();
    fit_cmd->add_option("--loci", fit_loci, "comma-separated snp ids for one joint haplotype fit");
    fit_cmd->add_flag("--pooled-alpha", fit_pooled, "share one error rate across loci");
    add_fit_flags(fit_cmd, fit_flags);
    fit_cmd->add_option("--out", fit_out, "output params TSV")->required();

    // call
    auto* call_cmd = app.add_subcommand("call", "posterior-mode genotype calls under given params");
    std::string call_counts, call_ped, call_params, call_panel, call_out;
    call_cmd->add_option("--counts", call_counts, "counts TSV")->required();
    call_cmd->add_option("--ped", call_ped, "pedigree TSV")->required();
    call_cmd->add_option("--params", call_params, "params TSV from 'fit'")->required();
    call_cmd->add_option("--panel", call_panel, "phased haplotype panel supplying joint frequencies");
    call_cmd->add_option("--out", call_out, "output calls TSV")->required();

    // ld-pipeline
    auto* ld_cmd = app.add_subcommand("ld-pipeline",
                                      "three-step region calling with partner SNPs");
    std::string ld_counts, ld_ped, ld_out;
    double ld_min_r2 = 0.5, ld_lambda = 1.0;
    CommonFitFlags ld_flags;
    ld_cmd->add_option("--counts", ld_counts, "counts TSV")->required();
    ld_cmd->add_option("--ped", ld_ped, "pedigree TSV")->required();
    ld_cmd->add_option("--min-r2", ld_min_r2, "minimum squared correlation for a partner")
        ->capture_default_str();
    ld_cmd->add_option("--lambda", ld_lambda, "error-rate weight in partner score")
        ->capture_default_str();
    add_fit_flags(ld_cmd, ld_flags);
    ld_cmd->add_option("--out", ld_out, "output calls TSV")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "simulate, fit, call and score methods");
    std::string eval_scenario, eval_methods = "pedgc,seqem", eval_out;
    int eval_reps = 0;
    std::uint64_t eval_seed = 1;
    double eval_min_r2 = 0.5, eval_lambda = 1.0;
    eval_cmd->add_option("--scenario", eval_scenario, "scenario file")->required();
    eval_cmd->add_option("--methods", eval_methods, "comma list: pedgc,seqem,hapgc,pedhapgc")
        ->capture_default_str();
    eval_cmd->add_option("--reps", eval_reps, "replications (default: scenario file value)");
    eval_cmd->add_option("--seed", eval_seed, "root random seed")->capture_default_str();
    eval_cmd->add_option("--min-r2", eval_min_r2, "minimum squared correlation for a partner")
        ->capture_default_str();
    eval_cmd->add_option("--lambda", eval_lambda, "error-rate weight in partner score")
        ->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "output comparison TSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (threads < 1) threads = 1;
        if (sim->parsed()) return cmd_simulate(sim_config, sim_seed, sim_prefix, threads);
        if (fit_cmd->parsed())
            return cmd_fit(fit_counts, fit_ped, fit_loci, fit_flags, fit_pooled, fit_out, threads);
        if (call_cmd->parsed())
            return cmd_call(call_counts, call_ped, call_params, call_panel, call_out);
        if (ld_cmd->parsed())
            return cmd_ld_pipeline(ld_counts, ld_ped, ld_min_r2, ld_lambda, ld_flags, ld_out,
                                   threads);
        if (eval_cmd->parsed())
            return cmd_evaluate(eval_scenario, eval_methods, eval_reps, eval_seed, eval_min_r2,
                                eval_lambda, eval_out, threads);
    } catch (const famgc::validation_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const famgc::capacity_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
