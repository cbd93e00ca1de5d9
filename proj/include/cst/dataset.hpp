#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cst/csv.hpp"
#include "cst/error.hpp"

namespace cst {

enum class FeatureKind { continuous, ordinal, categorical };

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "continuous" || s == "interval") return FeatureKind::continuous;
    if (s == "ordinal") return FeatureKind::ordinal;
    if (s == "categorical") return FeatureKind::categorical;
    throw ConfigError("unknown feature kind: " + s);
}

inline const char* to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::continuous: return "continuous";
        case FeatureKind::ordinal: return "ordinal";
        case FeatureKind::categorical: return "categorical";
    }
    return "?";
}

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::continuous;
    // Optional declared level order for categorical features; the first
    // entry is the dummy-coding reference level.
    std::vector<std::string> levels;
};

// Protected attributes are binary-coded at load time: the declared
// protected label maps to 1, the non-protected label to 0. Any other
// value is a data error, never silently coerced.
struct ProtectedSpec {
    std::string name;
    std::string protected_label = "1";
    std::string nonprotected_label = "0";
};

struct Schema {
    std::vector<FeatureSpec> features;
    std::vector<ProtectedSpec> protected_attrs;
    std::string decision;

    void validate() const {
        if (features.empty()) throw ConfigError("schema: at least one feature required");
        if (protected_attrs.empty())
            throw ConfigError("schema: at least one protected attribute required");
        if (decision.empty()) throw ConfigError("schema: decision column required");
        std::set<std::string> names;
        auto add = [&](const std::string& n) {
            if (!names.insert(n).second)
                throw ConfigError("schema: duplicate column name: " + n);
        };
        for (const auto& f : features) add(f.name);
        for (const auto& p : protected_attrs) add(p.name);
        add(decision);
    }

    int feature_index(const std::string& name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return static_cast<int>(i);
        return -1;
    }

    int protected_index(const std::string& name) const {
        for (std::size_t i = 0; i < protected_attrs.size(); ++i)
            if (protected_attrs[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

// One individual profile: feature vector (categorical values stored as
// level codes), protected flags, and the classifier decision.
struct Record {
    std::vector<double> x;
    std::vector<std::uint8_t> a;
    std::uint8_t y_hat = 0;
};

struct FeatureStats {
    double min = 0.0;
    double max = 0.0;
};

struct Dataset {
    Schema schema;
    std::vector<Record> rows;
    // Min/max over the factual data for continuous and ordinal features;
    // reused verbatim for counterfactual rows so distances stay comparable.
    std::vector<FeatureStats> stats;
    // Per categorical feature: code -> source label.
    std::vector<std::vector<std::string>> labels;

    std::size_t n() const { return rows.size(); }

    double feature(int row, int col) const { return rows[row].x[col]; }

    // Column accessor for SCM fitting: features and protected attributes
    // are both addressable by name.
    double column(const std::string& name, int row) const {
        const int f = schema.feature_index(name);
        if (f >= 0) return rows[row].x[f];
        const int p = schema.protected_index(name);
        if (p >= 0) return static_cast<double>(rows[row].a[p]);
        throw DataError("unknown column: " + name);
    }

    bool has_column(const std::string& name) const {
        return schema.feature_index(name) >= 0 || schema.protected_index(name) >= 0;
    }

    void compute_stats() {
        stats.assign(schema.features.size(), FeatureStats{});
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            if (schema.features[f].kind == FeatureKind::categorical) continue;
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& r : rows) {
                lo = std::min(lo, r.x[f]);
                hi = std::max(hi, r.x[f]);
            }
            if (rows.empty()) lo = hi = 0.0;
            stats[f] = {lo, hi};
        }
    }
};

namespace detail {

inline double parse_number(const std::string& cell, std::size_t row_no,
                           const std::string& col) {
    if (cell.empty())
        throw DataError("missing value at row " + std::to_string(row_no) +
                        ", column " + col);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw DataError("unparsable value '" + cell + "' at row " +
                        std::to_string(row_no) + ", column " + col);
    }
    if (pos != cell.size())
        throw DataError("unparsable value '" + cell + "' at row " +
                        std::to_string(row_no) + ", column " + col);
    return v;
}

}  // namespace detail

// Loads and validates a decision dataset. Row numbers in error messages
// are 1-based over data rows (the header is row 0).
inline Dataset load_dataset(const std::string& path, const Schema& schema,
                            char delimiter = ',') {
    schema.validate();
    const auto cells = csv::read_file(path, delimiter);
    if (cells.empty()) throw DataError("empty file (no header): " + path);

    const auto& header = cells[0];
    auto column_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw DataError("missing column '" + name + "' in " + path);
    };

    std::vector<int> feat_col(schema.features.size());
    for (std::size_t f = 0; f < schema.features.size(); ++f)
        feat_col[f] = column_of(schema.features[f].name);
    std::vector<int> prot_col(schema.protected_attrs.size());
    for (std::size_t p = 0; p < schema.protected_attrs.size(); ++p)
        prot_col[p] = column_of(schema.protected_attrs[p].name);
    const int dec_col = column_of(schema.decision);

    Dataset d;
    d.schema = schema;
    d.labels.assign(schema.features.size(), {});
    for (std::size_t f = 0; f < schema.features.size(); ++f)
        if (schema.features[f].kind == FeatureKind::categorical)
            d.labels[f] = schema.features[f].levels;  // may be empty: first-seen order

    d.rows.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const auto& row = cells[i];
        if (row.size() != header.size())
            throw DataError("row " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " fields, expected " +
                            std::to_string(header.size()));
        Record rec;
        rec.x.resize(schema.features.size());
        for (std::size_t f = 0; f < schema.features.size(); ++f) {
            const std::string& cell = row[feat_col[f]];
            if (schema.features[f].kind == FeatureKind::categorical) {
                if (cell.empty())
                    throw DataError("missing value at row " + std::to_string(i) +
                                    ", column " + schema.features[f].name);
                auto& tab = d.labels[f];
                auto it = std::find(tab.begin(), tab.end(), cell);
                if (it == tab.end()) {
                    if (!schema.features[f].levels.empty())
                        throw DataError("undeclared level '" + cell + "' at row " +
                                        std::to_string(i) + ", column " +
                                        schema.features[f].name);
                    tab.push_back(cell);
                    it = tab.end() - 1;
                }
                rec.x[f] = static_cast<double>(it - tab.begin());
            } else {
                rec.x[f] = detail::parse_number(cell, i, schema.features[f].name);
            }
        }
        rec.a.resize(schema.protected_attrs.size());
        for (std::size_t p = 0; p < schema.protected_attrs.size(); ++p) {
            const auto& spec = schema.protected_attrs[p];
            const std::string& cell = row[prot_col[p]];
            if (cell == spec.protected_label) {
                rec.a[p] = 1;
            } else if (cell == spec.nonprotected_label) {
                rec.a[p] = 0;
            } else {
                throw DataError("non-binary protected value '" + cell + "' at row " +
                                std::to_string(i) + ", column " + spec.name);
            }
        }
        const std::string& ycell = row[dec_col];
        if (ycell == "1") {
            rec.y_hat = 1;
        } else if (ycell == "0") {
            rec.y_hat = 0;
        } else {
            throw DataError("non-binary decision value '" + ycell + "' at row " +
                            std::to_string(i) + ", column " + schema.decision);
        }
        d.rows.push_back(std::move(rec));
    }
    d.compute_stats();
    return d;
}

struct SearchSpaces {
    std::vector<int> control;  // rows with a = 1 on the attribute
    std::vector<int> test;     // rows with a = 0
};

inline SearchSpaces partition_search_spaces(const Dataset& d, const std::string& attr) {
    const int p = d.schema.protected_index(attr);
    if (p < 0) throw DataError("unknown protected attribute: " + attr);
    SearchSpaces s;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        if (d.rows[i].a[p]) s.control.push_back(static_cast<int>(i));
        else s.test.push_back(static_cast<int>(i));
    }
    return s;
}

inline std::string intersection_name(const std::vector<std::string>& attrs) {
    std::string name;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i) name += "_x_";
        name += attrs[i];
    }
    return name;
}

// Adds the conjunction attribute A* = 1 iff every listed attribute is 1.
// Original columns are preserved.
inline Dataset derive_intersection_attribute(const Dataset& d,
                                             const std::vector<std::string>& attrs) {
    if (attrs.size() < 2)
        throw ConfigError("intersection requires at least two protected attributes");
    std::set<std::string> seen;
    std::vector<int> idx;
    for (const auto& a : attrs) {
        if (!seen.insert(a).second)
            throw ConfigError("duplicate attribute in intersection: " + a);
        const int p = d.schema.protected_index(a);
        if (p < 0) throw DataError("unknown protected attribute: " + a);
        idx.push_back(p);
    }
    Dataset out = d;
    const std::string star = intersection_name(attrs);
    if (out.schema.protected_index(star) >= 0 || out.schema.feature_index(star) >= 0)
        throw ConfigError("derived column name already exists: " + star);
    out.schema.protected_attrs.push_back({star, "1", "0"});
    for (auto& r : out.rows) {
        std::uint8_t all = 1;
        for (int p : idx) all = static_cast<std::uint8_t>(all & r.a[p]);
        r.a.push_back(all);
    }
    return out;
}

struct ParityRates {
    double rate_protected;     // P(Y=1 | A=1)
    double rate_nonprotected;  // P(Y=1 | A=0)
};

inline ParityRates demographic_parity(const Dataset& d, const std::string& attr) {
    const auto spaces = partition_search_spaces(d, attr);
    if (spaces.control.empty() || spaces.test.empty())
        throw DataError("demographic parity undefined: one side of '" + attr +
                        "' is empty");
    auto rate = [&](const std::vector<int>& ids) {
        long pos = 0;
        for (int i : ids) pos += d.rows[i].y_hat;
        return static_cast<double>(pos) / static_cast<double>(ids.size());
    };
    return {rate(spaces.control), rate(spaces.test)};
}

}  // namespace cst
