#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cst/classifier.hpp"
#include "cst/counterfactual.hpp"
#include "cst/dataset.hpp"
#include "cst/rng.hpp"
#include "cst/scm.hpp"

namespace cst {

// ---------------------------------------------------------------------------
// Loan application scenario: one binary protected attribute (gender) whose
// penalties propagate into salary and balance, and a linear-threshold bank
// classifier. Every exogenous draw is stored so counterfactuals can be
// generated exactly even though the penalty terms multiply the protected
// attribute and are not recoverable from residuals.
// ---------------------------------------------------------------------------

struct LoanScenarioParams {
    int n = 5000;
    double p_protected = 0.343;
    double salary_penalty = -1700.0;        // per Poisson(10) draw, applied when a = 1
    double balance_penalty = -300.0;        // per chi-squared(4) draw, applied when a = 1
    double balance_salary_weight = 0.3;
    double u1_scale = 8150.0;               // times Poisson(10)
    double u2_scale = 2500.0;               // times N(0,1)
    double threshold = 225000.0;            // acceptance cutoff on x1 + 5 x2
    std::uint64_t seed = 20240801;

    void validate() const {
        if (n < 1) throw ConfigError("loan scenario: n must be >= 1");
        if (!(p_protected >= 0.0 && p_protected <= 1.0))
            throw ConfigError("loan scenario: p_protected must be in [0,1]");
        if (u1_scale <= 0.0 || u2_scale <= 0.0)
            throw ConfigError("loan scenario: noise scales must be positive");
    }
};

// Raw exogenous draws per row, also written to the sidecar file.
struct LoanDraws {
    std::vector<std::uint8_t> a;
    std::vector<double> u1;               // u1_scale * Poisson(10)
    std::vector<double> u2;               // u2_scale * N(0,1)
    std::vector<double> salary_pen_draw;  // Poisson(10)
    std::vector<double> balance_pen_draw; // chi-squared(4)
};

struct LoanData {
    Dataset dataset;
    LoanDraws draws;
    // Engine-consumable ground truth: the exogenous baseline per node. The
    // structural A-coefficients are zero because the gender effect lives in
    // the stored multiplicative penalties; do(Gender := 0) therefore removes
    // the penalty exactly.
    NoiseTable noise;
    FittedScm ground_truth;
    Classifier classifier;
};

// Structural equations applied to one set of draws; single source for the
// generator and for consistency tests.
inline std::pair<double, double> loan_features_from_draws(const LoanScenarioParams& p,
                                                          int a, double u1, double u2,
                                                          double salary_pen_draw,
                                                          double balance_pen_draw) {
    const double x1 = p.salary_penalty * salary_pen_draw * a + u1;
    const double x2 =
        p.balance_penalty * balance_pen_draw * a + p.balance_salary_weight * x1 + u2;
    return {x1, x2};
}

inline Classifier loan_classifier(const LoanScenarioParams& p) {
    Classifier clf;
    clf.kind = "loan_linear_threshold";
    clf.weights = {{"AnnualSalary", 1.0}, {"AccountBalance", 5.0}};
    clf.threshold = p.threshold;
    return clf;
}

inline Schema loan_schema() {
    Schema s;
    s.features = {{"AnnualSalary", FeatureKind::continuous, {}},
                  {"AccountBalance", FeatureKind::continuous, {}}};
    s.protected_attrs = {{"Gender", "1", "0"}};
    s.decision = "LoanApproved";
    return s;
}

inline ScmSpec loan_scm_spec() {
    ScmSpec spec;
    ScmNode a;
    a.name = "Gender";
    a.is_protected = true;
    ScmNode x1;
    x1.name = "AnnualSalary";
    x1.parents = {"Gender"};
    ScmNode x2;
    x2.name = "AccountBalance";
    x2.parents = {"AnnualSalary", "Gender"};
    spec.nodes = {a, x1, x2};
    return spec;
}

inline LoanData generate_loan(const LoanScenarioParams& params) {
    params.validate();
    Rng rng(params.seed);

    LoanData out;
    out.dataset.schema = loan_schema();
    out.classifier = loan_classifier(params);

    out.dataset.rows.reserve(params.n);
    auto& dr = out.draws;
    for (int i = 0; i < params.n; ++i) {
        const int a = rng.bernoulli(params.p_protected) ? 1 : 0;
        const double u1 = params.u1_scale * static_cast<double>(rng.poisson(10.0));
        const double u2 = params.u2_scale * rng.normal();
        const double pen_s = static_cast<double>(rng.poisson(10.0));
        const double pen_b = rng.chisq4();
        const auto [x1, x2] = loan_features_from_draws(params, a, u1, u2, pen_s, pen_b);

        Record rec;
        rec.x = {x1, x2};
        rec.a = {static_cast<std::uint8_t>(a)};
        rec.y_hat = static_cast<std::uint8_t>(
            classify(out.classifier, rec.x, out.dataset.schema));
        out.dataset.rows.push_back(std::move(rec));

        dr.a.push_back(static_cast<std::uint8_t>(a));
        dr.u1.push_back(u1);
        dr.u2.push_back(u2);
        dr.salary_pen_draw.push_back(pen_s);
        dr.balance_pen_draw.push_back(pen_b);
    }
    out.dataset.compute_stats();

    out.noise.nodes = {"Gender", "AnnualSalary", "AccountBalance"};
    out.noise.values.resize(params.n);
    for (int i = 0; i < params.n; ++i)
        out.noise.values[i] = {static_cast<double>(dr.a[i]), dr.u1[i], dr.u2[i]};

    FittedScm gt;
    gt.spec = loan_scm_spec();
    gt.topo_order = gt.spec.topological_order();
    FittedEquation e1;
    e1.node = "AnnualSalary";
    e1.terms = {{"Gender", -1}};
    e1.weights = {0.0};
    e1.intercept = 0.0;
    FittedEquation e2;
    e2.node = "AccountBalance";
    e2.terms = {{"AnnualSalary", -1}, {"Gender", -1}};
    e2.weights = {params.balance_salary_weight, 0.0};
    e2.intercept = 0.0;
    gt.equations = {e1, e2};
    out.ground_truth = gt;
    return out;
}

// ---------------------------------------------------------------------------
// Law-school admissions stand-in: two correlated binary protected roots
// (race, gender), Gaussian noise on the grade average, Poisson counts behind
// the log-linked test score, and a highly selective weighted-cutoff rule.
// Coefficients are calibrated to the published marginals and selectivity,
// with race the dominant attribute.
// ---------------------------------------------------------------------------

struct SchoolScenarioParams {
    int n = 21790;
    double p_race = 0.161;    // R = 1: non-white
    double p_gender = 0.438;  // G = 1: female
    double p_joint = 0.084;   // P(R = 1 and G = 1)
    double ugpa_intercept = 3.1;
    double ugpa_race = -0.25;
    double ugpa_gender = -0.08;
    double ugpa_sigma = 0.35;
    double lsat_log_intercept = 3.5835189384561099;  // log 36
    double lsat_log_race = -0.10;
    double lsat_log_gender = -0.03;
    double cutoff = 20.8;
    std::uint64_t seed = 20240802;

    void validate() const {
        if (n < 1) throw ConfigError("school scenario: n must be >= 1");
        const double p10 = p_race - p_joint;
        const double p01 = p_gender - p_joint;
        const double p00 = 1.0 - p_race - p_gender + p_joint;
        if (p_joint < 0.0 || p10 < 0.0 || p01 < 0.0 || p00 < 0.0)
            throw ConfigError("school scenario: inconsistent joint prevalence");
        if (ugpa_sigma <= 0.0) throw ConfigError("school scenario: sigma must be positive");
    }
};

struct SchoolDraws {
    std::vector<std::uint8_t> r;
    std::vector<std::uint8_t> g;
    std::vector<double> u_ugpa;       // ugpa_sigma * N(0,1)
    std::vector<double> lsat_count;   // raw Poisson draw
};

struct SchoolData {
    Dataset dataset;
    SchoolDraws draws;
    Classifier classifier;
};

inline Classifier school_classifier(const SchoolScenarioParams& p) {
    Classifier clf;
    clf.kind = "school_weighted_cutoff";
    clf.weights = {{"UGPA", 0.6}, {"LSAT", 0.4}};
    clf.threshold = p.cutoff;
    return clf;
}

inline Schema school_schema() {
    Schema s;
    s.features = {{"UGPA", FeatureKind::continuous, {}},
                  {"LSAT", FeatureKind::continuous, {}}};
    s.protected_attrs = {{"R", "1", "0"}, {"G", "1", "0"}};
    s.decision = "Admit";
    return s;
}

inline ScmSpec school_scm_spec() {
    ScmSpec spec;
    ScmNode r;
    r.name = "R";
    r.is_protected = true;
    ScmNode g;
    g.name = "G";
    g.is_protected = true;
    ScmNode ugpa;
    ugpa.name = "UGPA";
    ugpa.parents = {"R", "G"};
    ScmNode lsat;
    lsat.name = "LSAT";
    lsat.parents = {"R", "G"};
    lsat.link = LinkKind::log_link;
    spec.nodes = {r, g, ugpa, lsat};
    return spec;
}

inline SchoolData generate_school_standin(const SchoolScenarioParams& params) {
    params.validate();
    Rng rng(params.seed);

    SchoolData out;
    out.dataset.schema = school_schema();
    out.classifier = school_classifier(params);

    const double p11 = params.p_joint;
    const double p10 = params.p_race - params.p_joint;
    const double p01 = params.p_gender - params.p_joint;

    out.dataset.rows.reserve(params.n);
    for (int i = 0; i < params.n; ++i) {
        const double u = rng.uniform01();
        int r = 0, g = 0;
        if (u <= p11) {
            r = 1;
            g = 1;
        } else if (u <= p11 + p10) {
            r = 1;
        } else if (u <= p11 + p10 + p01) {
            g = 1;
        }
        const double noise = params.ugpa_sigma * rng.normal();
        const double ugpa = params.ugpa_intercept + params.ugpa_race * r +
                            params.ugpa_gender * g + noise;
        const double eta = params.lsat_log_intercept + params.lsat_log_race * r +
                           params.lsat_log_gender * g;
        // log-link needs strict positivity; at these rates a zero count is
        // essentially impossible but is clamped anyway
        const double lsat =
            std::max<double>(1.0, static_cast<double>(rng.poisson(std::exp(eta))));

        Record rec;
        rec.x = {ugpa, lsat};
        rec.a = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g)};
        rec.y_hat = static_cast<std::uint8_t>(
            classify(out.classifier, rec.x, out.dataset.schema));
        out.dataset.rows.push_back(std::move(rec));

        out.draws.r.push_back(static_cast<std::uint8_t>(r));
        out.draws.g.push_back(static_cast<std::uint8_t>(g));
        out.draws.u_ugpa.push_back(noise);
        out.draws.lsat_count.push_back(lsat);
    }
    out.dataset.compute_stats();
    return out;
}

// ---------------------------------------------------------------------------
// CSV output shared by the generator subcommands.
// ---------------------------------------------------------------------------

inline void write_dataset_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    std::vector<std::string> header;
    for (const auto& f : d.schema.features) header.push_back(f.name);
    for (const auto& p : d.schema.protected_attrs) header.push_back(p.name);
    header.push_back(d.schema.decision);
    csv::write_row(out, header);
    for (const auto& r : d.rows) {
        std::vector<std::string> row;
        for (std::size_t f = 0; f < r.x.size(); ++f) {
            const bool cat = d.schema.features[f].kind == FeatureKind::categorical;
            if (cat && f < d.labels.size())
                row.push_back(d.labels[f][static_cast<std::size_t>(r.x[f])]);
            else
                row.push_back(format_double(r.x[f]));
        }
        for (auto v : r.a) row.push_back(std::to_string(static_cast<int>(v)));
        row.push_back(std::to_string(static_cast<int>(r.y_hat)));
        csv::write_row(out, row);
    }
}

inline void write_loan_sidecar(const LoanDraws& draws, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    csv::write_row(out, {"Gender", "AnnualSalary", "AccountBalance",
                         "SalaryPenaltyDraw", "BalancePenaltyDraw"});
    for (std::size_t i = 0; i < draws.a.size(); ++i)
        csv::write_row(out, {std::to_string(static_cast<int>(draws.a[i])),
                             format_double(draws.u1[i]), format_double(draws.u2[i]),
                             format_double(draws.salary_pen_draw[i]),
                             format_double(draws.balance_pen_draw[i])});
}

inline void write_school_sidecar(const SchoolDraws& draws, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    csv::write_row(out, {"R", "G", "U_UGPA", "LSAT_Count"});
    for (std::size_t i = 0; i < draws.r.size(); ++i)
        csv::write_row(out, {std::to_string(static_cast<int>(draws.r[i])),
                             std::to_string(static_cast<int>(draws.g[i])),
                             format_double(draws.u_ugpa[i]),
                             format_double(draws.lsat_count[i])});
}

// Loads a noise sidecar whose header names SCM nodes; extra columns are
// ignored. Used for the stored-noise counterfactual route.
inline NoiseTable load_noise_table(const std::string& path,
                                   const std::vector<std::string>& nodes,
                                   char delimiter = ',') {
    const auto cells = csv::read_file(path, delimiter);
    if (cells.empty()) throw DataError("empty noise table: " + path);
    const auto& header = cells[0];
    std::vector<int> cols;
    for (const auto& n : nodes) {
        int found = -1;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == n) found = static_cast<int>(i);
        if (found < 0) throw DataError("noise table missing column: " + n);
        cols.push_back(found);
    }
    NoiseTable t;
    t.nodes = nodes;
    t.values.reserve(cells.size() - 1);
    for (std::size_t r = 1; r < cells.size(); ++r) {
        std::vector<double> row;
        row.reserve(nodes.size());
        for (int c : cols)
            row.push_back(detail::parse_number(cells[r][c], r, header[c]));
        t.values.push_back(std::move(row));
    }
    return t;
}

}  // namespace cst
