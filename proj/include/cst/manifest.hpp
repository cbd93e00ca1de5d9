#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cst/classifier.hpp"
#include "cst/counterfactual.hpp"
#include "cst/dataset.hpp"
#include "cst/detectors.hpp"
#include "cst/report.hpp"
#include "cst/scm.hpp"
#include "cst/synthetic.hpp"
#include "cst/version.hpp"

namespace cst {

inline Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    for (const auto& fj : j.at("features")) {
        FeatureSpec f;
        f.name = fj.at("name").get<std::string>();
        f.kind = feature_kind_from_string(fj.value("kind", std::string("continuous")));
        if (fj.contains("levels"))
            f.levels = fj["levels"].get<std::vector<std::string>>();
        s.features.push_back(std::move(f));
    }
    for (const auto& pj : j.at("protected")) {
        ProtectedSpec p;
        p.name = pj.at("name").get<std::string>();
        p.protected_label = pj.value("protected_label", std::string("1"));
        p.nonprotected_label = pj.value("nonprotected_label", std::string("0"));
        s.protected_attrs.push_back(std::move(p));
    }
    s.decision = j.at("decision").get<std::string>();
    s.validate();
    return s;
}

// One declarative file drives a whole audit; flags may override single
// fields but there is no interactive mode.
struct RunManifest {
    std::string data_path;
    char delimiter = ',';
    Schema schema;
    std::optional<std::string> scm_path;
    std::optional<std::string> fitted_scm_path;
    std::optional<std::string> noise_table_path;
    Classifier classifier;
    std::vector<Method> methods;
    Mode mode = Mode::single;
    Direction direction = Direction::negative;
    std::vector<std::string> attrs;
    std::vector<int> ks;
    double alpha = 0.05;
    double tau = 0.0;
    std::optional<double> epsilon;
    bool normalize = true;
    bool include_centers_st = false;
    bool parallel = true;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    nlohmann::ordered_json raw;

    void validate() const {
        if (data_path.empty()) throw ConfigError("manifest: 'data' required");
        if (methods.empty()) throw ConfigError("manifest: no methods configured");
        if (attrs.empty()) throw ConfigError("manifest: no protected attributes");
        if (ks.empty()) throw ConfigError("manifest: no k values");
        for (int k : ks)
            if (k < 1) throw ConfigError("manifest: k must be >= 1");
        if (!(alpha > 0.0 && alpha <= 0.5))
            throw ConfigError("manifest: alpha must be in (0, 0.5]");
        if (!(tau >= -1.0 && tau <= 1.0))
            throw ConfigError("manifest: tau must be in [-1, 1]");
        if (mode != Mode::single && attrs.size() < 2)
            throw ConfigError("manifest: multiple/intersectional modes need >= 2 attrs");
        const bool has_model = scm_path || fitted_scm_path;
        const bool needs_model =
            mode == Mode::intersectional ||
            std::any_of(methods.begin(), methods.end(),
                        [](Method m) { return m != Method::st; });
        if (needs_model && !has_model)
            throw ConfigError("manifest: an 'scm' (or 'fitted_scm') entry is required "
                              "for counterfactual methods");
    }
};

inline RunManifest parse_manifest(const nlohmann::ordered_json& j,
                                  const std::filesystem::path& base_dir) {
    RunManifest m;
    m.raw = j;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path.string() : (base_dir / path).string();
    };
    m.data_path = resolve(j.at("data").get<std::string>());
    if (j.contains("delimiter")) {
        const auto d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw ConfigError("manifest: delimiter must be one character");
        m.delimiter = d[0];
    }
    if (j.contains("schema_path"))
        m.schema = schema_from_json(
            nlohmann::json::parse(std::ifstream(resolve(j["schema_path"]))));
    else
        m.schema = schema_from_json(j.at("schema"));
    if (j.contains("scm")) m.scm_path = resolve(j["scm"].get<std::string>());
    if (j.contains("fitted_scm"))
        m.fitted_scm_path = resolve(j["fitted_scm"].get<std::string>());
    if (j.contains("noise_table"))
        m.noise_table_path = resolve(j["noise_table"].get<std::string>());
    if (j.at("classifier").is_string())
        m.classifier = classifier_from_json(
            nlohmann::json::parse(std::ifstream(resolve(j["classifier"]))));
    else
        m.classifier = classifier_from_json(j.at("classifier"));
    for (const auto& s : j.at("methods"))
        m.methods.push_back(method_from_string(s.get<std::string>()));
    m.mode = mode_from_string(j.value("mode", std::string("single")));
    m.direction = direction_from_string(j.value("direction", std::string("negative")));
    m.attrs = j.at("protected").get<std::vector<std::string>>();
    m.ks = j.at("k").get<std::vector<int>>();
    m.alpha = j.value("alpha", 0.05);
    m.tau = j.value("tau", 0.0);
    if (j.contains("epsilon") && !j["epsilon"].is_null())
        m.epsilon = j["epsilon"].get<double>();
    m.normalize = j.value("normalize", true);
    m.include_centers_st = j.value("include_centers_st", false);
    m.parallel = j.value("parallel", true);
    m.seed = j.value("seed", 0ull);
    if (j.contains("out")) m.out_dir = resolve(j["out"].get<std::string>());
    m.validate();
    return m;
}

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest: " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return parse_manifest(j, std::filesystem::path(path).parent_path());
}

struct AuditOutcome {
    std::vector<SummaryRow> rows;
    std::vector<AuditReport> reports;
};

namespace detail {

struct LoadedInputs {
    Dataset dataset;
    FittedScm fitted;
    bool has_model = false;
    std::optional<NoiseTable> noise;
};

inline LoadedInputs load_inputs(const RunManifest& m) {
    LoadedInputs in;
    in.dataset = load_dataset(m.data_path, m.schema, m.delimiter);
    if (m.fitted_scm_path) {
        std::ifstream f(*m.fitted_scm_path);
        if (!f) throw ConfigError("cannot open fitted SCM: " + *m.fitted_scm_path);
        nlohmann::json j;
        f >> j;
        in.fitted = fitted_scm_from_json(j);
        in.has_model = true;
    } else if (m.scm_path) {
        in.fitted = fit_scm(load_scm_spec(*m.scm_path), in.dataset);
        in.has_model = true;
    }
    if (m.noise_table_path) {
        if (!in.has_model)
            throw ConfigError("noise table supplied without an SCM");
        in.noise = load_noise_table(*m.noise_table_path, in.fitted.topo_order,
                                    m.delimiter);
        if (in.noise->values.size() != in.dataset.n())
            throw ConfigError("noise table row count does not match the dataset");
    }
    return in;
}

inline std::string jsonl_name(const AuditReport& rep) {
    std::string attr = rep.attr;
    for (auto& c : attr)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return "audit_" + std::string(to_string(rep.mode)) + "_" + attr + "_" +
           to_string(rep.method) + "_k" + std::to_string(rep.k) + ".jsonl";
}

}  // namespace detail

// Full audit: per (attribute unit, method, k) an AuditReport written as
// JSONL, plus one consolidated summary CSV and a provenance record.
// `write_files` off runs everything in memory (used by sweeps and tests).
inline AuditOutcome run_audit(const RunManifest& m, bool write_files = true) {
    m.validate();
    auto inputs = detail::load_inputs(m);
    const Dataset& d = inputs.dataset;

    const bool any_cf_method =
        std::any_of(m.methods.begin(), m.methods.end(),
                    [](Method x) { return x != Method::st; });
    const bool any_st = std::any_of(m.methods.begin(), m.methods.end(),
                                    [](Method x) { return x == Method::st; });
    const int k_max = *std::max_element(m.ks.begin(), m.ks.end());

    if (write_files) std::filesystem::create_directories(m.out_dir);

    AuditOutcome out;
    auto emit = [&](AuditReport rep) {
        if (write_files)
            write_jsonl(rep, (std::filesystem::path(m.out_dir) /
                              detail::jsonl_name(rep))
                                 .string());
        out.rows.push_back(summary_row(rep));
        out.reports.push_back(std::move(rep));
    };

    if (m.mode == Mode::single) {
        for (const auto& attr : m.attrs) {
            CfDataset cf;
            if (any_cf_method)
                cf = generate_counterfactual_dataset(
                    inputs.fitted, d, {{attr, 0.0}}, m.classifier,
                    inputs.noise ? &*inputs.noise : nullptr);
            auto ec = detail::build_context(d, any_cf_method ? &cf : nullptr, attr,
                                            k_max, m.epsilon, m.normalize,
                                            any_cf_method, any_st, m.parallel);
            for (Method method : m.methods)
                for (int k : m.ks)
                    emit(detail::make_single_report(ec, method, m.direction, k, m.tau,
                                                    m.alpha, m.include_centers_st,
                                                    m.parallel));
        }
    } else if (m.mode == Mode::multiple) {
        std::vector<CfDataset> storage;
        storage.reserve(m.attrs.size());
        std::map<std::string, const CfDataset*> cfs;
        if (any_cf_method) {
            for (const auto& attr : m.attrs) {
                storage.push_back(generate_counterfactual_dataset(
                    inputs.fitted, d, {{attr, 0.0}}, m.classifier,
                    inputs.noise ? &*inputs.noise : nullptr));
                cfs[attr] = &storage.back();
            }
        }
        auto mc = detail::build_multi_contexts(d, cfs, m.attrs, k_max, m.epsilon,
                                               m.normalize, any_cf_method, any_st,
                                               m.parallel);
        for (Method method : m.methods)
            for (int k : m.ks)
                emit(detail::make_multiple_report(mc, method, m.direction, k, m.tau,
                                                  m.alpha, m.include_centers_st,
                                                  m.parallel));
    } else {  // intersectional
        if (!inputs.has_model)
            throw ConfigError("intersectional mode requires an SCM");
        auto setup = prepare_intersectional(d, m.attrs, inputs.fitted, m.classifier);
        auto ec = detail::build_context(setup.derived, &setup.cf, setup.star, k_max,
                                        m.epsilon, m.normalize, true, any_st,
                                        m.parallel);
        for (Method method : m.methods)
            for (int k : m.ks) {
                AuditReport rep = detail::make_single_report(
                    ec, method, m.direction, k, m.tau, m.alpha, m.include_centers_st,
                    m.parallel);
                rep.mode = Mode::intersectional;
                emit(std::move(rep));
            }
    }

    if (write_files) {
        write_summary_csv(out.rows,
                          (std::filesystem::path(m.out_dir) / "summary.csv").string());
        write_provenance(m.raw, m.seed, kVersion,
                         (std::filesystem::path(m.out_dir) / "provenance.json").string());
    }
    return out;
}

// k-sweep over an explicit list, writing one long-format CSV.
inline AuditOutcome run_sweep(const RunManifest& manifest, const std::vector<int>& ks,
                              bool write_files = true) {
    RunManifest m = manifest;
    m.ks = ks;
    m.validate();
    AuditOutcome out = run_audit(m, false);
    if (write_files) {
        std::filesystem::create_directories(m.out_dir);
        write_sweep_csv(out.rows,
                        (std::filesystem::path(m.out_dir) / "sweep.csv").string());
        write_provenance(m.raw, m.seed, kVersion,
                         (std::filesystem::path(m.out_dir) / "provenance.json").string());
    }
    return out;
}

}  // namespace cst
