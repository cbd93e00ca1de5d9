#pragma once

#include <cmath>
#include <span>

#include "cst/dataset.hpp"
#include "cst/error.hpp"

namespace cst {

// Context for the mixed-type record distance. Stats come from the factual
// dataset; counterfactual values outside the factual range are allowed and
// may push a per-attribute term above 1 before averaging.
struct DistanceContext {
    const Schema* schema = nullptr;
    const std::vector<FeatureStats>* stats = nullptr;
    bool normalize = true;

    static DistanceContext for_dataset(const Dataset& d, bool normalize = true) {
        return {&d.schema, &d.stats, normalize};
    }
};

// Overlap measure for categorical values, normalized Manhattan for
// continuous and ordinal (interval is treated as continuous).
inline double per_attribute_distance(double v1, double v2, FeatureKind kind,
                                     const FeatureStats& st, bool normalize = true) {
    if (kind == FeatureKind::categorical) return v1 == v2 ? 0.0 : 1.0;
    const double diff = std::fabs(v1 - v2);
    if (!normalize) return diff;
    const double range = st.max - st.min;
    if (range == 0.0) {
        if (diff == 0.0) return 0.0;
        throw Error("distance: constant feature (min == max) with differing values");
    }
    return diff / range;
}

// Gower form: mean of the per-attribute distances over the feature columns
// only. Protected attributes and the decision never enter.
inline double gower_distance(std::span<const double> x1, std::span<const double> x2,
                             const DistanceContext& ctx) {
    const auto& feats = ctx.schema->features;
    if (x1.size() != feats.size() || x2.size() != feats.size())
        throw Error("gower_distance: vector length does not match schema");
    double sum = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i)
        sum += per_attribute_distance(x1[i], x2[i], feats[i].kind, (*ctx.stats)[i],
                                      ctx.normalize);
    return sum / static_cast<double>(feats.size());
}

}  // namespace cst
