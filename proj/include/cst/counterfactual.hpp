#pragma once

#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cst/classifier.hpp"
#include "cst/dataset.hpp"
#include "cst/error.hpp"
#include "cst/scm.hpp"

namespace cst {

// Exogenous values per (row, node): abducted residuals for non-root nodes,
// observed values for roots. Node order follows the model's topo order.
struct NoiseTable {
    std::vector<std::string> nodes;
    std::vector<std::vector<double>> values;  // [row][node]

    int node_index(const std::string& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i] == name) return static_cast<int>(i);
        return -1;
    }

    double at(int row, int node) const { return values[row][node]; }
};

// Frequentist point abduction: for identity links the residual
// u = x - (intercept + w . parents), for log links u = log(x) - linear
// predictor. Root values are recorded verbatim.
inline NoiseTable abduct(const FittedScm& m, const Dataset& d) {
    NoiseTable t;
    t.nodes = m.topo_order;
    const int n = static_cast<int>(d.n());
    t.values.assign(n, std::vector<double>(t.nodes.size(), 0.0));
    for (std::size_t ni = 0; ni < t.nodes.size(); ++ni) {
        const std::string& name = t.nodes[ni];
        const ScmNode& nd = m.spec.node(name);
        if (nd.is_root()) {
            for (int r = 0; r < n; ++r) t.values[r][ni] = d.column(name, r);
            continue;
        }
        const FittedEquation* eq = m.equation_for(name);
        if (!eq) throw ModelError("no fitted equation for node: " + name);
        for (int r = 0; r < n; ++r) {
            double obs = d.column(name, r);
            if (eq->link == LinkKind::log_link) {
                if (obs <= 0.0)
                    throw ModelError("non-positive value for log-link node '" + name +
                                     "' at row " + std::to_string(r));
                obs = std::log(obs);
            }
            double pred = eq->intercept;
            for (std::size_t c = 0; c < eq->terms.size(); ++c)
                pred += eq->weights[c] * detail::term_value(eq->terms[c], d, r);
            t.values[r][ni] = obs - pred;
        }
    }
    return t;
}

// Graph surgery: intervened nodes become constants (incoming influence
// discarded, outgoing edges kept). Returns the mutilated model.
inline FittedScm intervene(const FittedScm& m,
                           const std::map<std::string, double>& do_map) {
    FittedScm out = m;
    for (const auto& [node, value] : do_map) {
        if (m.spec.index_of(node) < 0)
            throw ModelError("cannot intervene on unknown node: " + node);
        out.interventions[node] = value;
    }
    return out;
}

// Evaluates the (possibly mutilated) model in topological order using the
// supplied exogenous values. Returns per requested row the value of every
// node, in the model's topo order.
inline std::vector<std::vector<double>> predict(const FittedScm& m,
                                                const NoiseTable& noise,
                                                const std::vector<int>& row_ids) {
    std::vector<int> noise_idx(m.topo_order.size());
    for (std::size_t i = 0; i < m.topo_order.size(); ++i) {
        noise_idx[i] = noise.node_index(m.topo_order[i]);
        if (noise_idx[i] < 0)
            throw ModelError("noise table is missing node: " + m.topo_order[i]);
    }
    std::vector<std::vector<double>> out(row_ids.size(),
                                         std::vector<double>(m.topo_order.size(), 0.0));
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < m.topo_order.size(); ++i) pos[m.topo_order[i]] = i;

    for (std::size_t ri = 0; ri < row_ids.size(); ++ri) {
        const int row = row_ids[ri];
        if (row < 0 || row >= static_cast<int>(noise.values.size()))
            throw ModelError("noise table has no entry for row " + std::to_string(row));
        auto& vals = out[ri];
        for (std::size_t i = 0; i < m.topo_order.size(); ++i) {
            const std::string& name = m.topo_order[i];
            const auto forced = m.interventions.find(name);
            if (forced != m.interventions.end()) {
                vals[i] = forced->second;
                continue;
            }
            const ScmNode& nd = m.spec.node(name);
            if (nd.is_root()) {
                vals[i] = noise.at(row, noise_idx[i]);
                continue;
            }
            const FittedEquation* eq = m.equation_for(name);
            if (!eq) throw ModelError("no fitted equation for node: " + name);
            double pred = eq->intercept;
            for (std::size_t c = 0; c < eq->terms.size(); ++c) {
                const double pv = vals[pos.at(eq->terms[c].parent)];
                if (eq->terms[c].level < 0)
                    pred += eq->weights[c] * pv;
                else
                    pred += eq->weights[c] *
                            (pv == static_cast<double>(eq->terms[c].level) ? 1.0 : 0.0);
            }
            pred += noise.at(row, noise_idx[i]);
            vals[i] = eq->link == LinkKind::log_link ? std::exp(pred) : pred;
        }
    }
    return out;
}

// Counterfactual twin of one factual record.
struct CfRecord {
    int source = -1;              // factual row id
    std::vector<double> x;        // counterfactual features
    std::vector<std::uint8_t> a;  // intervened protected flags
    std::uint8_t y_hat = 0;       // re-classified decision
};

struct CfDataset {
    Schema schema;  // copy of the factual schema
    std::vector<std::vector<std::string>> labels;  // categorical code -> label
    std::map<std::string, double> intervention;
    std::vector<CfRecord> rows;
    std::unordered_map<int, int> by_source;

    const CfRecord* for_source(int row) const {
        auto it = by_source.find(row);
        return it == by_source.end() ? nullptr : &rows[it->second];
    }
};

// Abduction, action, prediction over every record with protected status on
// the intervened attribute(s), then re-classification of the result. When a
// generator supplies ground-truth noise it is consumed directly instead of
// residual abduction.
inline CfDataset generate_counterfactual_dataset(const FittedScm& m, const Dataset& d,
                                                 const std::map<std::string, double>& do_map,
                                                 const Classifier& clf,
                                                 const NoiseTable* stored_noise = nullptr) {
    if (do_map.empty()) throw ConfigError("empty intervention");
    std::vector<int> prot_idx;
    for (const auto& [node, value] : do_map) {
        const int p = d.schema.protected_index(node);
        if (p < 0)
            throw ConfigError("intervention target '" + node +
                              "' is not a protected attribute");
        if (value != 0.0)
            throw ConfigError("counterfactual generation intervenes to the "
                              "non-protected status (0), got " +
                              format_double(value));
        prot_idx.push_back(p);
    }

    const NoiseTable noise = stored_noise ? *stored_noise : abduct(m, d);
    const FittedScm mutilated = intervene(m, do_map);

    std::vector<int> scope;
    for (std::size_t r = 0; r < d.n(); ++r) {
        bool all = true;
        for (int p : prot_idx) all = all && d.rows[r].a[p];
        if (all) scope.push_back(static_cast<int>(r));
    }

    const auto predicted = predict(mutilated, noise, scope);

    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < mutilated.topo_order.size(); ++i)
        pos[mutilated.topo_order[i]] = i;

    CfDataset cf;
    cf.schema = d.schema;
    cf.labels = d.labels;
    cf.intervention = do_map;
    cf.rows.reserve(scope.size());
    for (std::size_t i = 0; i < scope.size(); ++i) {
        const int row = scope[i];
        CfRecord rec;
        rec.source = row;
        rec.x = d.rows[row].x;  // features outside the SCM stay factual
        for (std::size_t f = 0; f < d.schema.features.size(); ++f) {
            auto it = pos.find(d.schema.features[f].name);
            if (it != pos.end()) rec.x[f] = predicted[i][it->second];
        }
        rec.a = d.rows[row].a;
        for (int p : prot_idx) rec.a[p] = 0;
        rec.y_hat = static_cast<std::uint8_t>(classify(clf, rec.x, d.schema));
        cf.by_source[row] = static_cast<int>(cf.rows.size());
        cf.rows.push_back(std::move(rec));
    }
    return cf;
}

// CSV export mirroring the factual schema plus a source-row-id column.
inline void export_cf_csv(const CfDataset& cf, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path);
    std::vector<std::string> header{"source_row"};
    for (const auto& f : cf.schema.features) header.push_back(f.name);
    for (const auto& p : cf.schema.protected_attrs) header.push_back(p.name);
    header.push_back(cf.schema.decision);
    csv::write_row(out, header);
    for (const auto& r : cf.rows) {
        std::vector<std::string> row{std::to_string(r.source)};
        for (std::size_t f = 0; f < r.x.size(); ++f) {
            const bool cat = cf.schema.features[f].kind == FeatureKind::categorical;
            if (cat && f < cf.labels.size() &&
                r.x[f] >= 0.0 && r.x[f] < static_cast<double>(cf.labels[f].size()))
                row.push_back(cf.labels[f][static_cast<std::size_t>(r.x[f])]);
            else
                row.push_back(format_double(r.x[f]));
        }
        for (auto v : r.a) row.push_back(std::to_string(static_cast<int>(v)));
        row.push_back(std::to_string(static_cast<int>(r.y_hat)));
        csv::write_row(out, row);
    }
}

}  // namespace cst
