#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cst/dataset.hpp"
#include "cst/error.hpp"

namespace cst {

// Deterministic linear-threshold decision rule over named features.
// Both experiment classifiers (loan and school admissions) are instances;
// the comparison is strict.
struct Classifier {
    std::string kind = "linear_threshold";
    std::vector<std::pair<std::string, double>> weights;
    double threshold = 0.0;
};

inline double classifier_score(const Classifier& clf, std::span<const double> x,
                               const Schema& schema) {
    double s = 0.0;
    for (const auto& [name, w] : clf.weights) {
        const int f = schema.feature_index(name);
        if (f < 0) throw ConfigError("classifier references missing feature: " + name);
        s += w * x[f];
    }
    return s;
}

inline int classify(const Classifier& clf, std::span<const double> x,
                    const Schema& schema) {
    return classifier_score(clf, x, schema) > clf.threshold ? 1 : 0;
}

inline Classifier classifier_from_json(const nlohmann::json& j) {
    Classifier clf;
    clf.kind = j.value("kind", std::string("linear_threshold"));
    for (const auto& [name, w] : j.at("weights").items())
        clf.weights.emplace_back(name, w.get<double>());
    clf.threshold = j.at("threshold").get<double>();
    return clf;
}

inline nlohmann::ordered_json classifier_to_json(const Classifier& clf) {
    nlohmann::ordered_json j;
    j["kind"] = clf.kind;
    nlohmann::ordered_json w;
    for (const auto& [name, wt] : clf.weights) w[name] = wt;
    j["weights"] = w;
    j["threshold"] = clf.threshold;
    return j;
}

}  // namespace cst
