#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cst/dataset.hpp"
#include "cst/error.hpp"

namespace cst {

enum class LinkKind { identity, log_link };

inline LinkKind link_from_string(const std::string& s) {
    if (s == "identity") return LinkKind::identity;
    if (s == "log") return LinkKind::log_link;
    throw ConfigError("unknown link: " + s);
}

inline const char* to_string(LinkKind l) {
    return l == LinkKind::identity ? "identity" : "log";
}

// Optional generative noise declaration, kept for documentation and for
// synthetic use; fitting and abduction never read it.
struct NoiseDecl {
    std::string family;
    std::vector<double> params;
};

struct ScmNode {
    std::string name;
    std::vector<std::string> parents;
    LinkKind link = LinkKind::identity;
    bool is_protected = false;
    std::optional<NoiseDecl> noise;

    bool is_root() const { return parents.empty(); }
};

struct ScmSpec {
    std::vector<ScmNode> nodes;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return static_cast<int>(i);
        return -1;
    }

    const ScmNode& node(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw ModelError("unknown SCM node: " + name);
        return nodes[i];
    }

    // Kahn's algorithm. On a cycle, reports one offending path.
    std::vector<std::string> topological_order() const {
        const std::size_t n = nodes.size();
        std::vector<int> indeg(n, 0);
        std::vector<std::vector<int>> children(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& p : nodes[i].parents) {
                const int pi = index_of(p);
                if (pi < 0)
                    throw ModelError("node '" + nodes[i].name +
                                     "' has undeclared parent '" + p + "'");
                children[pi].push_back(static_cast<int>(i));
                ++indeg[i];
            }
        }
        std::vector<int> ready;
        for (std::size_t i = 0; i < n; ++i)
            if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
        std::vector<std::string> order;
        std::size_t head = 0;
        while (head < ready.size()) {
            const int u = ready[head++];
            order.push_back(nodes[u].name);
            for (int c : children[u])
                if (--indeg[c] == 0) ready.push_back(c);
        }
        if (order.size() != n) {
            // walk parent edges among the unresolved nodes until one repeats
            std::vector<int> left;
            for (std::size_t i = 0; i < n; ++i)
                if (indeg[i] > 0) left.push_back(static_cast<int>(i));
            int cur = left.front();
            std::vector<int> path;
            std::set<int> seen;
            while (!seen.count(cur)) {
                seen.insert(cur);
                path.push_back(cur);
                for (const auto& p : nodes[cur].parents) {
                    const int pi = index_of(p);
                    if (indeg[pi] > 0) {
                        cur = pi;
                        break;
                    }
                }
            }
            std::string msg = "cycle detected: ";
            bool in_cycle = false;
            for (int v : path) {
                if (v == cur) in_cycle = true;
                if (in_cycle) msg += nodes[v].name + " -> ";
            }
            msg += nodes[cur].name;
            throw ModelError(msg);
        }
        return order;
    }

    void validate() const {
        std::set<std::string> names;
        for (const auto& nd : nodes)
            if (!names.insert(nd.name).second)
                throw ModelError("duplicate SCM node: " + nd.name);
        for (const auto& nd : nodes)
            if (nd.is_protected && !nd.parents.empty())
                throw ModelError("protected node '" + nd.name +
                                 "' must be a root (has parents)");
        (void)topological_order();
    }
};

inline ScmSpec parse_scm_spec(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("SCM spec is not valid JSON: ") + e.what());
    }
    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw ConfigError("SCM spec: 'nodes' array required");
    ScmSpec spec;
    for (const auto& nj : j["nodes"]) {
        ScmNode nd;
        nd.name = nj.at("name").get<std::string>();
        if (nj.contains("parents"))
            nd.parents = nj["parents"].get<std::vector<std::string>>();
        if (nj.contains("link")) nd.link = link_from_string(nj["link"].get<std::string>());
        if (nj.contains("protected")) nd.is_protected = nj["protected"].get<bool>();
        if (nj.contains("noise")) {
            NoiseDecl decl;
            decl.family = nj["noise"].at("family").get<std::string>();
            if (nj["noise"].contains("params"))
                decl.params = nj["noise"]["params"].get<std::vector<double>>();
            nd.noise = decl;
        }
        spec.nodes.push_back(std::move(nd));
    }
    spec.validate();
    return spec;
}

inline ScmSpec load_scm_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open SCM spec: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scm_spec(ss.str());
}

// One expanded design column: a parent as-is, or one dummy level of a
// categorical parent (level index into the dataset's label table; the
// reference level 0 gets no column).
struct DesignTerm {
    std::string parent;
    int level = -1;
};

struct FittedEquation {
    std::string node;
    LinkKind link = LinkKind::identity;
    double intercept = 0.0;
    std::vector<DesignTerm> terms;
    std::vector<double> weights;  // aligned with terms
    double residual_se = 0.0;
};

struct FittedScm {
    ScmSpec spec;
    std::vector<std::string> topo_order;
    std::vector<FittedEquation> equations;  // non-root nodes, topo order
    // Non-empty only on a mutilated model: node -> forced constant.
    std::map<std::string, double> interventions;

    const FittedEquation* equation_for(const std::string& node) const {
        for (const auto& eq : equations)
            if (eq.node == node) return &eq;
        return nullptr;
    }
};

namespace detail {

// Solves the symmetric system A w = b by Gaussian elimination with partial
// pivoting; the designs here are tiny. Throws on (near-)singularity.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b,
                                        const std::string& context) {
    const std::size_t p = b.size();
    double scale = 0.0;
    for (const auto& row : a)
        for (double v : row) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) scale = 1.0;
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) <= 1e-12 * scale)
            throw ModelError("singular fit (rank-deficient design) for " + context);
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < p; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < p; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> w(p, 0.0);
    for (std::size_t ri = p; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < p; ++c) s -= a[ri][c] * w[c];
        w[ri] = s / a[ri][ri];
    }
    return w;
}

inline std::vector<DesignTerm> expand_terms(const ScmNode& node, const Dataset& d) {
    std::vector<DesignTerm> terms;
    for (const auto& parent : node.parents) {
        const int f = d.schema.feature_index(parent);
        if (f >= 0 && d.schema.features[f].kind == FeatureKind::categorical) {
            const std::size_t levels = d.labels[f].size();
            if (levels < 2)
                throw ModelError("categorical parent '" + parent +
                                 "' has fewer than two levels");
            for (std::size_t l = 1; l < levels; ++l)
                terms.push_back({parent, static_cast<int>(l)});
        } else {
            terms.push_back({parent, -1});
        }
    }
    return terms;
}

inline double term_value(const DesignTerm& t, const Dataset& d, int row) {
    const double v = d.column(t.parent, row);
    if (t.level < 0) return v;
    return v == static_cast<double>(t.level) ? 1.0 : 0.0;
}

}  // namespace detail

// Ordinary least squares of each non-root node (or its log, for log-link
// nodes) on an intercept plus its parents. Categorical parents are
// dummy-coded against the reference level.
inline FittedScm fit_scm(const ScmSpec& spec, const Dataset& d) {
    spec.validate();
    for (const auto& nd : spec.nodes)
        if (!d.has_column(nd.name))
            throw ModelError("dataset is missing SCM node column: " + nd.name);

    FittedScm m;
    m.spec = spec;
    m.topo_order = spec.topological_order();
    const int n = static_cast<int>(d.n());

    for (const auto& name : m.topo_order) {
        const ScmNode& nd = spec.node(name);
        if (nd.is_root()) continue;
        FittedEquation eq;
        eq.node = name;
        eq.link = nd.link;
        eq.terms = detail::expand_terms(nd, d);
        const std::size_t p = eq.terms.size();

        std::vector<double> y(n);
        for (int r = 0; r < n; ++r) {
            double v = d.column(name, r);
            if (nd.link == LinkKind::log_link) {
                if (v <= 0.0)
                    throw ModelError("non-positive value for log-link node '" + name +
                                     "' at row " + std::to_string(r));
                v = std::log(v);
            }
            y[r] = v;
        }
        if (n <= static_cast<int>(p))
            throw ModelError("too few rows to fit node '" + name + "'");

        // centered normal equations for conditioning
        std::vector<double> xmean(p, 0.0);
        double ymean = 0.0;
        for (int r = 0; r < n; ++r) {
            ymean += y[r];
            for (std::size_t c = 0; c < p; ++c)
                xmean[c] += detail::term_value(eq.terms[c], d, r);
        }
        ymean /= n;
        for (auto& v : xmean) v /= n;

        std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
        std::vector<double> xty(p, 0.0);
        for (int r = 0; r < n; ++r) {
            std::vector<double> xc(p);
            for (std::size_t c = 0; c < p; ++c)
                xc[c] = detail::term_value(eq.terms[c], d, r) - xmean[c];
            const double yc = y[r] - ymean;
            for (std::size_t i = 0; i < p; ++i) {
                xty[i] += xc[i] * yc;
                for (std::size_t j = i; j < p; ++j) xtx[i][j] += xc[i] * xc[j];
            }
        }
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j) xtx[i][j] = xtx[j][i];

        eq.weights = detail::solve_linear(xtx, xty, "node '" + name + "'");
        eq.intercept = ymean;
        for (std::size_t c = 0; c < p; ++c) eq.intercept -= eq.weights[c] * xmean[c];

        double ssr = 0.0;
        for (int r = 0; r < n; ++r) {
            double pred = eq.intercept;
            for (std::size_t c = 0; c < p; ++c)
                pred += eq.weights[c] * detail::term_value(eq.terms[c], d, r);
            const double e = y[r] - pred;
            ssr += e * e;
        }
        const int dof = n - static_cast<int>(p) - 1;
        eq.residual_se = dof > 0 ? std::sqrt(ssr / dof) : 0.0;
        m.equations.push_back(std::move(eq));
    }
    return m;
}

// Replaces a set of protected root nodes by the single conjunction root and
// refits every equation against the merged attribute. The dataset must
// already carry the derived column (see derive_intersection_attribute).
inline std::pair<ScmSpec, FittedScm> merge_intersectional(
    const FittedScm& fitted, const Dataset& d, const std::vector<std::string>& attrs) {
    if (attrs.size() < 2)
        throw ConfigError("intersection requires at least two protected attributes");
    for (const auto& a : attrs) {
        const int i = fitted.spec.index_of(a);
        if (i < 0) throw ModelError("unknown SCM node: " + a);
        const auto& nd = fitted.spec.nodes[i];
        if (!nd.is_root() || !nd.is_protected)
            throw ModelError("intersection attribute '" + a +
                             "' must be a protected root node");
    }
    const std::string star = intersection_name(attrs);
    if (d.schema.protected_index(star) < 0)
        throw ModelError("dataset lacks derived column '" + star +
                         "'; derive the intersection attribute first");

    auto is_merged = [&](const std::string& n) {
        return std::find(attrs.begin(), attrs.end(), n) != attrs.end();
    };
    ScmSpec merged;
    bool star_added = false;
    for (const auto& nd : fitted.spec.nodes) {
        if (is_merged(nd.name)) {
            if (!star_added) {
                ScmNode root;
                root.name = star;
                root.is_protected = true;
                merged.nodes.push_back(root);
                star_added = true;
            }
            continue;
        }
        ScmNode copy = nd;
        std::vector<std::string> parents;
        bool star_parent = false;
        for (const auto& p : copy.parents) {
            if (is_merged(p)) {
                if (!star_parent) parents.push_back(star);
                star_parent = true;
            } else {
                parents.push_back(p);
            }
        }
        copy.parents = std::move(parents);
        merged.nodes.push_back(std::move(copy));
    }
    merged.validate();
    FittedScm refit = fit_scm(merged, d);
    return {merged, refit};
}

// --- serialization of fitted models (fit-scm subcommand output) ---

inline nlohmann::ordered_json fitted_scm_to_json(const FittedScm& m) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& nd : m.spec.nodes) {
        nlohmann::ordered_json nj;
        nj["name"] = nd.name;
        if (!nd.parents.empty()) nj["parents"] = nd.parents;
        nj["link"] = to_string(nd.link);
        if (nd.is_protected) nj["protected"] = true;
        j["nodes"].push_back(nj);
    }
    j["topo_order"] = m.topo_order;
    j["equations"] = nlohmann::ordered_json::array();
    for (const auto& eq : m.equations) {
        nlohmann::ordered_json ej;
        ej["node"] = eq.node;
        ej["link"] = to_string(eq.link);
        ej["intercept"] = eq.intercept;
        ej["terms"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < eq.terms.size(); ++i) {
            nlohmann::ordered_json tj;
            tj["parent"] = eq.terms[i].parent;
            if (eq.terms[i].level >= 0) tj["level"] = eq.terms[i].level;
            tj["weight"] = eq.weights[i];
            ej["terms"].push_back(tj);
        }
        ej["residual_se"] = eq.residual_se;
        j["equations"].push_back(ej);
    }
    return j;
}

inline FittedScm fitted_scm_from_json(const nlohmann::json& j) {
    FittedScm m;
    for (const auto& nj : j.at("nodes")) {
        ScmNode nd;
        nd.name = nj.at("name").get<std::string>();
        if (nj.contains("parents"))
            nd.parents = nj["parents"].get<std::vector<std::string>>();
        if (nj.contains("link")) nd.link = link_from_string(nj["link"].get<std::string>());
        if (nj.contains("protected")) nd.is_protected = nj["protected"].get<bool>();
        m.spec.nodes.push_back(std::move(nd));
    }
    m.spec.validate();
    m.topo_order = j.at("topo_order").get<std::vector<std::string>>();
    for (const auto& ej : j.at("equations")) {
        FittedEquation eq;
        eq.node = ej.at("node").get<std::string>();
        eq.link = link_from_string(ej.at("link").get<std::string>());
        eq.intercept = ej.at("intercept").get<double>();
        for (const auto& tj : ej.at("terms")) {
            DesignTerm t;
            t.parent = tj.at("parent").get<std::string>();
            if (tj.contains("level")) t.level = tj["level"].get<int>();
            eq.terms.push_back(t);
            eq.weights.push_back(tj.at("weight").get<double>());
        }
        eq.residual_se = ej.value("residual_se", 0.0);
        m.equations.push_back(std::move(eq));
    }
    return m;
}

}  // namespace cst
