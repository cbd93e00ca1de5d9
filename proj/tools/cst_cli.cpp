// Command-line front end for the discrimination auditing engine.
//
// Subcommands: generate, fit-scm, cfgen, audit, sweep, report. Every audit
// is driven by a declarative manifest so runs can be replayed; flags only
// override single manifest fields.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cst/manifest.hpp"
#include "cst/synthetic.hpp"
#include "cst/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cst::ConfigError("cannot open: " + path);
    json j;
    in >> j;
    return j;
}

void apply_overrides(cst::RunManifest& m, const std::vector<int>& ks,
                     const std::vector<std::string>& methods,
                     const std::optional<std::string>& mode,
                     const std::optional<std::string>& direction,
                     const std::optional<double>& alpha,
                     const std::optional<double>& tau,
                     const std::optional<double>& epsilon, bool include_centers,
                     const std::optional<std::uint64_t>& seed,
                     const std::optional<std::string>& out) {
    if (!ks.empty()) m.ks = ks;
    if (!methods.empty()) {
        m.methods.clear();
        for (const auto& s : methods) m.methods.push_back(cst::method_from_string(s));
    }
    if (mode) m.mode = cst::mode_from_string(*mode);
    if (direction) m.direction = cst::direction_from_string(*direction);
    if (alpha) m.alpha = *alpha;
    if (tau) m.tau = *tau;
    if (epsilon) m.epsilon = *epsilon;
    if (include_centers) m.include_centers_st = true;
    if (seed) m.seed = *seed;
    if (out) m.out_dir = *out;
    m.validate();
}

std::vector<int> parse_k_range(const std::string& expr) {
    // start:end:step, inclusive of end when it lands on the grid
    std::vector<int> ks;
    int a = 0, b = 0, s = 1;
    if (std::sscanf(expr.c_str(), "%d:%d:%d", &a, &b, &s) != 3 || s < 1 || a < 1 || b < a)
        throw cst::ConfigError("bad k range (want start:end:step): " + expr);
    for (int k = a; k <= b; k += s) ks.push_back(k);
    return ks;
}

int cmd_generate(const std::string& scenario, const std::string& out_dir, int n,
                 std::uint64_t seed, const json& overrides) {
    fs::create_directories(out_dir);
    if (scenario == "loan") {
        cst::LoanScenarioParams p;
        if (n > 0) p.n = n;
        if (seed) p.seed = seed;
        if (overrides.contains("p_protected")) p.p_protected = overrides["p_protected"];
        if (overrides.contains("salary_penalty"))
            p.salary_penalty = overrides["salary_penalty"];
        if (overrides.contains("balance_penalty"))
            p.balance_penalty = overrides["balance_penalty"];
        if (overrides.contains("threshold")) p.threshold = overrides["threshold"];
        const auto data = cst::generate_loan(p);
        cst::write_dataset_csv(data.dataset, out_dir + "/loan.csv");
        cst::write_loan_sidecar(data.draws, out_dir + "/loan_noise.csv");
        std::ofstream gt(out_dir + "/loan_ground_truth_scm.json");
        gt << cst::fitted_scm_to_json(data.ground_truth).dump(2) << '\n';
        std::cout << "wrote " << out_dir << "/loan.csv (" << data.dataset.n()
                  << " rows)\n";
        return 0;
    }
    if (scenario == "school") {
        cst::SchoolScenarioParams p;
        if (n > 0) p.n = n;
        if (seed) p.seed = seed;
        if (overrides.contains("cutoff")) p.cutoff = overrides["cutoff"];
        const auto data = cst::generate_school_standin(p);
        cst::write_dataset_csv(data.dataset, out_dir + "/school.csv");
        cst::write_school_sidecar(data.draws, out_dir + "/school_noise.csv");
        std::cout << "wrote " << out_dir << "/school.csv (" << data.dataset.n()
                  << " rows)\n";
        return 0;
    }
    throw cst::ConfigError("unknown scenario: " + scenario);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterfactual situation testing audit engine"};
    app.set_version_flag("--version", cst::kVersion);
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic scenario dataset");
    std::string scenario, gen_out = "data";
    int gen_n = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_params;
    gen->add_option("--scenario", scenario, "loan or school")->required();
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--n", gen_n, "population size");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--params", gen_params, "JSON object with parameter overrides");

    // fit-scm
    auto* fit = app.add_subcommand("fit-scm", "fit SCM equations on a dataset");
    std::string fit_data, fit_schema, fit_scm, fit_out = "fitted_scm.json";
    std::string fit_delim = ",";
    fit->add_option("--data", fit_data)->required();
    fit->add_option("--schema", fit_schema)->required();
    fit->add_option("--scm", fit_scm)->required();
    fit->add_option("--out", fit_out);
    fit->add_option("--delimiter", fit_delim);

    // cfgen
    auto* cfg = app.add_subcommand("cfgen", "generate the counterfactual dataset");
    std::string cf_data, cf_schema, cf_scm, cf_fitted, cf_clf, cf_out = "cf.csv";
    std::string cf_noise, cf_delim = ",";
    std::vector<std::string> cf_do;
    cfg->add_option("--data", cf_data)->required();
    cfg->add_option("--schema", cf_schema)->required();
    cfg->add_option("--scm", cf_scm, "SCM spec (fit on the data)");
    cfg->add_option("--fitted", cf_fitted, "fitted SCM JSON (skips fitting)");
    cfg->add_option("--classifier", cf_clf)->required();
    cfg->add_option("--do", cf_do, "protected attribute(s) forced to 0")->required();
    cfg->add_option("--noise-table", cf_noise, "stored exogenous draws (CSV)");
    cfg->add_option("--out", cf_out);
    cfg->add_option("--delimiter", cf_delim);

    // shared audit/sweep override flags
    auto add_overrides = [](CLI::App* cmd, auto& vars) {
        cmd->add_option("--manifest", vars.manifest)->required();
        cmd->add_option("--k", vars.ks, "override k values");
        cmd->add_option("--method", vars.methods, "override methods");
        cmd->add_option("--mode", vars.mode);
        cmd->add_option("--direction", vars.direction);
        cmd->add_option("--alpha", vars.alpha);
        cmd->add_option("--tau", vars.tau);
        cmd->add_option("--epsilon", vars.epsilon);
        cmd->add_flag("--include-centers", vars.include_centers,
                      "count the ST centers (ablation)");
        cmd->add_option("--seed", vars.seed);
        cmd->add_option("--out", vars.out);
    };
    struct OverrideVars {
        std::string manifest;
        std::vector<int> ks;
        std::vector<std::string> methods;
        std::optional<std::string> mode, direction, out;
        std::optional<double> alpha, tau, epsilon;
        std::optional<std::uint64_t> seed;
        bool include_centers = false;
    };

    auto* audit = app.add_subcommand("audit", "run the audit described by a manifest");
    OverrideVars av;
    add_overrides(audit, av);

    auto* sweep = app.add_subcommand("sweep", "k-sweep writing a long-format CSV");
    OverrideVars sv;
    std::string k_range;
    add_overrides(sweep, sv);
    sweep->add_option("--k-range", k_range, "start:end:step added to --k values");

    auto* report = app.add_subcommand("report", "rebuild the summary CSV from JSONL");
    std::string rep_dir, rep_out = "summary.csv";
    report->add_option("--jsonl", rep_dir, "directory of audit JSONL files")->required();
    report->add_option("--out", rep_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const json overrides =
                gen_params.empty() ? json::object() : json::parse(gen_params);
            return cmd_generate(scenario, gen_out, gen_n, gen_seed, overrides);
        }
        if (*fit) {
            const auto schema = cst::schema_from_json(read_json(fit_schema));
            const auto d = cst::load_dataset(fit_data, schema, fit_delim[0]);
            const auto fitted = cst::fit_scm(cst::load_scm_spec(fit_scm), d);
            std::ofstream out(fit_out);
            if (!out) throw cst::ConfigError("cannot write: " + fit_out);
            out << cst::fitted_scm_to_json(fitted).dump(2) << '\n';
            std::cout << "wrote " << fit_out << '\n';
            return 0;
        }
        if (*cfg) {
            const auto schema = cst::schema_from_json(read_json(cf_schema));
            const auto d = cst::load_dataset(cf_data, schema, cf_delim[0]);
            cst::FittedScm fitted;
            if (!cf_fitted.empty())
                fitted = cst::fitted_scm_from_json(read_json(cf_fitted));
            else if (!cf_scm.empty())
                fitted = cst::fit_scm(cst::load_scm_spec(cf_scm), d);
            else
                throw cst::ConfigError("cfgen needs --scm or --fitted");
            const auto clf = cst::classifier_from_json(read_json(cf_clf));
            std::map<std::string, double> do_map;
            for (const auto& a : cf_do) do_map[a] = 0.0;
            std::optional<cst::NoiseTable> noise;
            if (!cf_noise.empty())
                noise = cst::load_noise_table(cf_noise, fitted.topo_order, cf_delim[0]);
            const auto cf = cst::generate_counterfactual_dataset(
                fitted, d, do_map, clf, noise ? &*noise : nullptr);
            cst::export_cf_csv(cf, cf_out);
            std::cout << "wrote " << cf_out << " (" << cf.rows.size() << " rows)\n";
            return 0;
        }
        if (*audit) {
            auto m = cst::load_manifest(av.manifest);
            apply_overrides(m, av.ks, av.methods, av.mode, av.direction, av.alpha,
                            av.tau, av.epsilon, av.include_centers, av.seed, av.out);
            const auto outcome = cst::run_audit(m);
            for (const auto& r : outcome.rows)
                std::cout << r.method << " " << r.attr << " k=" << r.k << ": "
                          << r.detected << " detected (" << cst::format_pct(r.detected_pct)
                          << "%), " << r.significant << " significant ("
                          << cst::format_pct(r.significant_pct) << "%)\n";
            for (const auto& rep : outcome.reports)
                if (rep.method == cst::Method::cf && rep.cf_outside_cst_with > 0)
                    std::cerr << "note: " << rep.cf_outside_cst_with
                              << " CF case(s) fall outside the CST w/ detections "
                                 "(attr "
                              << rep.attr << ", k=" << rep.k << ")\n";
            std::cout << "artifacts in " << m.out_dir << '\n';
            return 0;
        }
        if (*sweep) {
            auto m = cst::load_manifest(sv.manifest);
            apply_overrides(m, sv.ks, sv.methods, sv.mode, sv.direction, sv.alpha,
                            sv.tau, sv.epsilon, sv.include_centers, sv.seed, sv.out);
            std::vector<int> ks = sv.ks;
            if (!k_range.empty())
                for (int k : parse_k_range(k_range)) ks.push_back(k);
            if (ks.empty()) ks = m.ks;
            std::sort(ks.begin(), ks.end());
            ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
            cst::run_sweep(m, ks);
            std::cout << "wrote " << m.out_dir << "/sweep.csv (" << ks.size()
                      << " k values)\n";
            return 0;
        }
        if (*report) {
            const auto rows = cst::summarize_jsonl_dir(rep_dir);
            cst::write_summary_csv(rows, rep_out);
            std::cout << "wrote " << rep_out << " (" << rows.size() << " rows)\n";
            return 0;
        }
    } catch (const std::exception& e) {
        ordered_json err;
        err["error"] = e.what();
        err["exit"] = 1;
        std::cerr << err.dump() << '\n';
        return 1;
    }
    return 0;
}
