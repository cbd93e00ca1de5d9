#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cst/counterfactual.hpp"
#include "cst/dataset.hpp"
#include "cst/neighbors.hpp"
#include "cst/parallel.hpp"
#include "cst/stats.hpp"

namespace cst {

enum class Method { cst_without, cst_with, st, cf };
enum class Mode { single, multiple, intersectional };
enum class Direction { negative, positive };

inline Method method_from_string(const std::string& s) {
    if (s == "cst_without" || s == "cst-wo") return Method::cst_without;
    if (s == "cst_with" || s == "cst-w") return Method::cst_with;
    if (s == "st") return Method::st;
    if (s == "cf") return Method::cf;
    throw ConfigError("unknown method: " + s);
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::cst_without: return "cst_without";
        case Method::cst_with: return "cst_with";
        case Method::st: return "st";
        case Method::cf: return "cf";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "single") return Mode::single;
    if (s == "multiple") return Mode::multiple;
    if (s == "intersectional") return Mode::intersectional;
    throw ConfigError("unknown mode: " + s);
}

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::single: return "single";
        case Mode::multiple: return "multiple";
        case Mode::intersectional: return "intersectional";
    }
    return "?";
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "negative") return Direction::negative;
    if (s == "positive") return Direction::positive;
    throw ConfigError("unknown direction: " + s);
}

inline const char* to_string(Direction d) {
    return d == Direction::negative ? "negative" : "positive";
}

struct RunConfig {
    Method method = Method::cst_without;
    Mode mode = Mode::single;
    Direction direction = Direction::negative;
    std::vector<std::string> attrs;
    int k = 15;
    double tau = 0.0;
    double alpha = 0.05;
    std::optional<double> epsilon;
    std::uint64_t seed = 0;
    bool include_centers_st = false;  // ablation only; Remark-2 default is off
    bool normalize = true;
    bool parallel = true;

    void validate() const {
        if (attrs.empty()) throw ConfigError("no protected attribute configured");
        if (mode != Mode::single && attrs.size() < 2)
            throw ConfigError("multiple/intersectional modes need >= 2 attributes");
        if (k < 1) throw ConfigError("k must be >= 1");
        if (!(alpha > 0.0 && alpha <= 0.5)) throw ConfigError("alpha must be in (0, 0.5]");
        if (!(tau >= -1.0 && tau <= 1.0)) throw ConfigError("tau must be in [-1, 1]");
    }
};

struct TestResult {
    int complainant = -1;
    double p_c = 0.0;
    double p_t = 0.0;
    double delta_p = 0.0;
    double ci_lo = 0.0;   // one-sided lower bound
    double ci2_lo = 0.0;  // two-sided, clipped
    double ci2_hi = 0.0;
    int m = 0;  // effective group size entering the width
    bool detected = false;
    bool significant = false;
    bool saturated = false;   // a search space had fewer than k candidates
    bool degenerate = false;  // a group came out empty (epsilon too tight)
    int y = -1;
    int y_cf = -1;
};

struct AuditSummary {
    int complainants = 0;
    int detected = 0;
    int significant = 0;
    double detected_pct = 0.0;
    double significant_pct = 0.0;
    double avg_delta_p = std::numeric_limits<double>::quiet_NaN();  // over detected
};

struct AuditReport {
    Method method = Method::cst_without;
    Mode mode = Mode::single;
    Direction direction = Direction::negative;
    std::string attr;
    int k = 0;
    double alpha = 0.05;
    double tau = 0.0;
    std::vector<TestResult> results;
    // Multiple mode: the per-attribute runs backing the combined decision.
    std::vector<std::pair<std::string, std::vector<TestResult>>> per_attr;
    AuditSummary summary;
    // Diagnostic only (Prop. 1 allows violations in principle): CF cases
    // whose CST w/ delta does not exceed tau.
    int cf_outside_cst_with = 0;
};

namespace detail {

// Per-complainant neighborhoods cached at the largest k needed. Smaller k
// evaluations take prefixes, which is exact because members are sorted by
// (distance, id).
struct NeighborSet {
    std::vector<int> control;  // k_cache + 1 candidates, self retained
    std::vector<int> test_cst;
    std::vector<int> test_st;
};

struct EvalContext {
    const Dataset* d = nullptr;
    const CfDataset* cf = nullptr;
    std::string attr;
    int attr_idx = -1;
    SearchSpaces spaces;
    std::vector<int> complainants;
    DistanceContext ctx;
    int k_cache = 0;
    std::optional<double> epsilon;
    std::vector<NeighborSet> cache;  // aligned with complainants
};

inline EvalContext build_context(const Dataset& d, const CfDataset* cf,
                                 const std::string& attr, int k_cache,
                                 std::optional<double> epsilon, bool normalize,
                                 bool need_cst, bool need_st, bool parallel,
                                 const std::vector<int>* complainant_subset = nullptr) {
    EvalContext ec;
    ec.d = &d;
    ec.cf = cf;
    ec.attr = attr;
    ec.attr_idx = d.schema.protected_index(attr);
    if (ec.attr_idx < 0) throw DataError("unknown protected attribute: " + attr);
    ec.spaces = partition_search_spaces(d, attr);
    ec.complainants = complainant_subset ? *complainant_subset : ec.spaces.control;
    ec.ctx = DistanceContext::for_dataset(d, normalize);
    ec.k_cache = k_cache;
    ec.epsilon = epsilon;
    if (need_cst && !cf) throw ConfigError("counterfactual dataset required");
    if (ec.spaces.control.empty()) throw Error("empty control search space for " + attr);
    if (ec.spaces.test.empty()) throw Error("empty test search space for " + attr);

    ec.cache.resize(ec.complainants.size());
    parallel_for(
        ec.complainants.size(),
        [&](std::size_t i) {
            const int c = ec.complainants[i];
            NeighborSet ns;
            ns.control = top_k_neighbors(d.rows[c].x, ec.spaces.control, d, k_cache + 1,
                                         ec.ctx, epsilon)
                             .members;
            if (need_cst) {
                const CfRecord* twin = cf->for_source(c);
                if (!twin)
                    throw Error("no counterfactual row for complainant " +
                                std::to_string(c));
                ns.test_cst =
                    top_k_neighbors(twin->x, ec.spaces.test, d, k_cache, ec.ctx, epsilon)
                        .members;
            }
            if (need_st) {
                ns.test_st = top_k_neighbors(d.rows[c].x, ec.spaces.test, d, k_cache,
                                             ec.ctx, epsilon)
                                 .members;
            }
            ec.cache[i] = std::move(ns);
        },
        parallel);
    return ec;
}

inline int count_negative(const Dataset& d, const std::vector<int>& members,
                          std::size_t limit) {
    int neg = 0;
    for (std::size_t i = 0; i < limit; ++i) neg += d.rows[members[i]].y_hat == 0;
    return neg;
}

// Evaluates one complainant for one method at prefix size k. The control
// candidates carry the complainant itself; CST w/o and ST drop it, CST w/
// counts the center pair on top of the k neighbors (Remark-2 semantics).
inline TestResult evaluate_one(const EvalContext& ec, std::size_t ci, Method method,
                               Direction dir, int k, double tau, double alpha,
                               bool include_centers_st) {
    const Dataset& d = *ec.d;
    const int c = ec.complainants[ci];
    const NeighborSet& ns = ec.cache[ci];

    TestResult r;
    r.complainant = c;
    r.y = d.rows[c].y_hat;
    if (ec.cf) {
        const CfRecord* twin = ec.cf->for_source(c);
        if (twin) r.y_cf = twin->y_hat;
    }

    // control members: first k candidates that are not the complainant
    std::vector<int> ctr;
    ctr.reserve(k);
    for (std::size_t i = 0; i < ns.control.size() && static_cast<int>(ctr.size()) < k; ++i)
        if (ns.control[i] != c) ctr.push_back(ns.control[i]);

    const bool use_st_center = method == Method::st;
    const std::vector<int>& tst_full = use_st_center ? ns.test_st : ns.test_cst;
    const std::size_t tst_n = std::min<std::size_t>(k, tst_full.size());

    const bool include =
        method == Method::cst_with || method == Method::cf ||
        (method == Method::st && include_centers_st);

    r.saturated = static_cast<int>(ctr.size()) < k || static_cast<int>(tst_n) < k;
    const int m_c = static_cast<int>(ctr.size()) + (include ? 1 : 0);
    const int m_t = static_cast<int>(tst_n) + (include ? 1 : 0);
    if (m_c == 0 || m_t == 0) {
        r.degenerate = true;
        r.p_c = r.p_t = r.delta_p = std::numeric_limits<double>::quiet_NaN();
        r.ci_lo = r.ci2_lo = r.ci2_hi = std::numeric_limits<double>::quiet_NaN();
        return r;
    }

    // ST's test center is the factual complainant; its outcome is counted
    // on the test side when the ablation flag includes centers.
    const int center_test_outcome = use_st_center ? r.y : r.y_cf;

    const int neg_c = count_negative(d, ctr, ctr.size());
    const int neg_t = count_negative(d, tst_full, tst_n);
    r.p_c = negative_rate(neg_c, static_cast<int>(ctr.size()), include, r.y);
    r.p_t = negative_rate(neg_t, static_cast<int>(tst_n), include, center_test_outcome);
    r.delta_p = r.p_c - r.p_t;
    r.m = std::min(m_c, m_t);
    r.ci_lo = one_sided_lower(r.p_c, r.p_t, r.m, alpha);
    const Interval two = two_sided_ci(r.p_c, r.p_t, r.m, alpha);
    r.ci2_lo = two.lo;
    r.ci2_hi = two.hi;

    if (method == Method::cf) {
        const bool flip = dir == Direction::negative ? (r.y == 0 && r.y_cf == 1)
                                                     : (r.y == 1 && r.y_cf == 0);
        r.detected = flip;
        if (dir == Direction::negative) {
            r.significant = flip && r.ci_lo > tau;
        } else {
            r.significant =
                flip && (r.delta_p + wald_width(r.p_c, r.p_t, r.m, alpha)) < tau;
        }
    } else if (dir == Direction::negative) {
        const Decision dec = decide(r.delta_p, r.ci_lo, tau);
        r.detected = dec.detected;
        r.significant = dec.significant;
    } else {
        const Decision dec = decide_positive(r.delta_p, r.p_c, r.p_t, r.m, alpha, tau);
        r.detected = dec.detected;
        r.significant = dec.significant;
    }
    return r;
}

inline std::vector<TestResult> evaluate(const EvalContext& ec, Method method,
                                        Direction dir, int k, double tau, double alpha,
                                        bool include_centers_st, bool parallel) {
    if (k > ec.k_cache) throw Error("requested k exceeds the cached neighborhoods");
    std::vector<TestResult> out(ec.complainants.size());
    parallel_for(
        ec.complainants.size(),
        [&](std::size_t i) {
            out[i] = evaluate_one(ec, i, method, dir, k, tau, alpha, include_centers_st);
        },
        parallel);
    return out;
}

inline AuditSummary summarize(const std::vector<TestResult>& results) {
    AuditSummary s;
    s.complainants = static_cast<int>(results.size());
    double sum = 0.0;
    for (const auto& r : results) {
        if (r.detected) {
            ++s.detected;
            sum += r.delta_p;
        }
        if (r.significant) ++s.significant;
    }
    if (s.complainants > 0) {
        s.detected_pct = 100.0 * s.detected / s.complainants;
        s.significant_pct = 100.0 * s.significant / s.complainants;
    }
    if (s.detected > 0) s.avg_delta_p = sum / s.detected;
    return s;
}

// Single-attribute report straight from a prepared context; run_cst/run_st/
// run_cf and the manifest orchestration all funnel through here so a shared
// neighborhood cache cannot change results.
inline AuditReport make_single_report(const EvalContext& ec, Method method,
                                      Direction dir, int k, double tau, double alpha,
                                      bool include_centers_st, bool parallel) {
    AuditReport rep;
    rep.method = method;
    rep.mode = Mode::single;
    rep.direction = dir;
    rep.attr = ec.attr;
    rep.k = k;
    rep.alpha = alpha;
    rep.tau = tau;
    rep.results = evaluate(ec, method, dir, k, tau, alpha, include_centers_st, parallel);
    rep.summary = summarize(rep.results);
    if (method == Method::cf)
        for (const auto& r : rep.results)
            if (r.detected && !(r.delta_p > tau)) ++rep.cf_outside_cst_with;
    return rep;
}

// Per-attribute contexts over the complainants that belong to every
// protected group, ready for multiple-discrimination evaluation at any
// k <= k_cache.
struct MultiContexts {
    std::vector<std::string> attrs;
    std::vector<int> members;
    std::vector<EvalContext> contexts;
};

inline MultiContexts build_multi_contexts(
    const Dataset& d, const std::map<std::string, const CfDataset*>& cfs,
    const std::vector<std::string>& attrs, int k_cache, std::optional<double> epsilon,
    bool normalize, bool need_cst, bool need_st, bool parallel) {
    MultiContexts mc;
    mc.attrs = attrs;
    std::vector<int> idx;
    for (const auto& a : attrs) {
        const int p = d.schema.protected_index(a);
        if (p < 0) throw DataError("unknown protected attribute: " + a);
        idx.push_back(p);
    }
    for (std::size_t r = 0; r < d.n(); ++r) {
        bool all = true;
        for (int p : idx) all = all && d.rows[r].a[p];
        if (all) mc.members.push_back(static_cast<int>(r));
    }
    for (const auto& attr : attrs) {
        const CfDataset* cf = nullptr;
        if (need_cst) {
            auto it = cfs.find(attr);
            if (it == cfs.end() || !it->second)
                throw ConfigError("missing counterfactual dataset for " + attr);
            cf = it->second;
        }
        mc.contexts.push_back(build_context(d, cf, attr, k_cache, epsilon, normalize,
                                            need_cst, need_st, parallel, &mc.members));
    }
    return mc;
}

inline AuditReport make_multiple_report(const MultiContexts& mc, Method method,
                                        Direction dir, int k, double tau, double alpha,
                                        bool include_centers_st, bool parallel) {
    const std::size_t q = mc.attrs.size();
    const double alpha_each = alpha / static_cast<double>(q);

    AuditReport rep;
    rep.method = method;
    rep.mode = Mode::multiple;
    rep.direction = dir;
    {
        std::string label;
        for (std::size_t i = 0; i < mc.attrs.size(); ++i)
            label += (i ? "+" : "") + mc.attrs[i];
        rep.attr = label;
    }
    rep.k = k;
    rep.alpha = alpha;
    rep.tau = tau;

    for (std::size_t a = 0; a < q; ++a)
        rep.per_attr.emplace_back(mc.attrs[a],
                                  evaluate(mc.contexts[a], method, dir, k, tau,
                                           alpha_each, include_centers_st, parallel));

    rep.results.resize(mc.members.size());
    for (std::size_t i = 0; i < mc.members.size(); ++i) {
        TestResult combined = rep.per_attr.front().second[i];
        for (std::size_t a = 1; a < rep.per_attr.size(); ++a) {
            const TestResult& r = rep.per_attr[a].second[i];
            combined.detected = combined.detected && r.detected;
            combined.significant = combined.significant && r.significant;
            combined.saturated = combined.saturated || r.saturated;
            combined.degenerate = combined.degenerate || r.degenerate;
            // keep the numbers of the binding (least favorable) attribute
            const bool binding = dir == Direction::negative
                                     ? r.delta_p < combined.delta_p
                                     : r.delta_p > combined.delta_p;
            if (binding || std::isnan(combined.delta_p)) {
                combined.p_c = r.p_c;
                combined.p_t = r.p_t;
                combined.delta_p = r.delta_p;
                combined.ci_lo = r.ci_lo;
                combined.ci2_lo = r.ci2_lo;
                combined.ci2_hi = r.ci2_hi;
                combined.m = r.m;
            }
        }
        if (combined.degenerate) {
            combined.detected = false;
            combined.significant = false;
        }
        rep.results[i] = combined;
    }

    rep.summary = summarize(rep.results);
    // The paper averages the deltas of the per-attribute detections, so the
    // summary follows that convention instead of the combined rows.
    double sum = 0.0;
    int n_det = 0;
    for (const auto& [attr, results] : rep.per_attr)
        for (const auto& r : results)
            if (r.detected) {
                sum += r.delta_p;
                ++n_det;
            }
    rep.summary.avg_delta_p =
        n_det > 0 ? sum / n_det : std::numeric_limits<double>::quiet_NaN();
    if (q == 1) rep.per_attr.clear();
    return rep;
}

}  // namespace detail

// Counterfactual situation testing (CST w/ or w/o) for a single protected
// attribute. Every protected row is a complainant, regardless of its
// decision outcome.
inline AuditReport run_cst(const Dataset& d, const CfDataset& cf, const RunConfig& cfg) {
    RunConfig c = cfg;
    c.mode = Mode::single;
    c.validate();
    if (c.method != Method::cst_without && c.method != Method::cst_with)
        throw ConfigError("run_cst expects a CST method");
    const std::string& attr = c.attrs.front();
    if (!cf.intervention.count(attr))
        throw ConfigError("counterfactual dataset was not generated under do(" + attr +
                          " := 0)");
    auto ec = detail::build_context(d, &cf, attr, c.k, c.epsilon, c.normalize, true,
                                    false, c.parallel);
    return detail::make_single_report(ec, c.method, c.direction, c.k, c.tau, c.alpha,
                                      c.include_centers_st, c.parallel);
}

// Classical situation testing: the test group is searched around the
// factual complainant and centers are excluded (Remark-2 convention).
inline AuditReport run_st(const Dataset& d, const RunConfig& cfg) {
    RunConfig c = cfg;
    c.mode = Mode::single;
    c.validate();
    const std::string& attr = c.attrs.front();
    auto ec = detail::build_context(d, nullptr, attr, c.k, c.epsilon, c.normalize, false,
                                    true, c.parallel);
    return detail::make_single_report(ec, Method::st, c.direction, c.k, c.tau, c.alpha,
                                      c.include_centers_st, c.parallel);
}

// Counterfactual fairness: detection is the decision flip between the
// factual record and its counterfactual; confidence comes from the CST w/
// neighborhoods conditioned on the flip.
inline AuditReport run_cf(const Dataset& d, const CfDataset& cf, const RunConfig& cfg) {
    RunConfig c = cfg;
    c.mode = Mode::single;
    c.validate();
    const std::string& attr = c.attrs.front();
    if (!cf.intervention.count(attr))
        throw ConfigError("counterfactual dataset was not generated under do(" + attr +
                          " := 0)");
    auto ec = detail::build_context(d, &cf, attr, c.k, c.epsilon, c.normalize, true,
                                    false, c.parallel);
    return detail::make_single_report(ec, Method::cf, c.direction, c.k, c.tau, c.alpha,
                                      false, c.parallel);
}

// Multiple discrimination: the configured method runs once per attribute;
// a complainant belonging to every protected group is detected only when
// every per-attribute run detects it, and significant only when every
// per-attribute interval at the Bonferroni level alpha/q excludes tau.
inline AuditReport run_multiple(const Dataset& d,
                                const std::map<std::string, const CfDataset*>& cfs,
                                const RunConfig& cfg) {
    RunConfig c = cfg;
    c.mode = Mode::multiple;
    if (c.attrs.size() == 1) {
        // degenerate q = 1 form, kept so the reduction to the single run is
        // checkable; the CLI enforces >= 2 attributes for this mode
        RunConfig v = c;
        v.mode = Mode::single;
        v.validate();
    } else {
        c.validate();
    }
    const bool needs_cf = c.method != Method::st;
    auto mc = detail::build_multi_contexts(d, cfs, c.attrs, c.k, c.epsilon, c.normalize,
                                           needs_cf, c.method == Method::st, c.parallel);
    return detail::make_multiple_report(mc, c.method, c.direction, c.k, c.tau, c.alpha,
                                        c.include_centers_st, c.parallel);
}

struct IntersectionalSetup {
    Dataset derived;      // dataset with the conjunction attribute
    std::string star;     // derived attribute name
    ScmSpec merged_spec;  // SCM with the merged protected root
    FittedScm merged_fit;
    CfDataset cf;         // counterfactuals under do(A* := 0)
};

// Derives the conjunction attribute, merges and refits the SCM on it, and
// generates the counterfactual dataset under do(A* := 0). After this the
// intersectional test is an ordinary single-attribute run on A*.
inline IntersectionalSetup prepare_intersectional(const Dataset& d,
                                                  const std::vector<std::string>& attrs,
                                                  const FittedScm& fitted,
                                                  const Classifier& clf) {
    IntersectionalSetup s;
    s.derived = derive_intersection_attribute(d, attrs);
    auto [spec, fit] = merge_intersectional(fitted, s.derived, attrs);
    s.merged_spec = std::move(spec);
    s.merged_fit = std::move(fit);
    s.star = intersection_name(attrs);
    s.cf = generate_counterfactual_dataset(s.merged_fit, s.derived, {{s.star, 0.0}}, clf);
    return s;
}

struct IntersectionalRun {
    IntersectionalSetup setup;
    AuditReport report;
};

inline IntersectionalRun run_intersectional(const Dataset& d, const RunConfig& cfg,
                                            const FittedScm& fitted,
                                            const Classifier& clf) {
    RunConfig c = cfg;
    c.mode = Mode::intersectional;
    c.validate();
    IntersectionalRun out;
    out.setup = prepare_intersectional(d, c.attrs, fitted, clf);
    RunConfig single = c;
    single.mode = Mode::single;
    single.attrs = {out.setup.star};
    if (c.method == Method::st) {
        out.report = run_st(out.setup.derived, single);
    } else if (c.method == Method::cf) {
        out.report = run_cf(out.setup.derived, out.setup.cf, single);
    } else {
        out.report = run_cst(out.setup.derived, out.setup.cf, single);
    }
    out.report.mode = Mode::intersectional;
    return out;
}

}  // namespace cst
