#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "cst/counterfactual.hpp"
#include "cst/dataset.hpp"
#include "cst/distance.hpp"
#include "cst/error.hpp"

namespace cst {

enum class CenterKind { factual, counterfactual };

struct Neighborhood {
    CenterKind center_kind = CenterKind::factual;
    std::vector<int> members;      // ascending (distance, row id)
    std::vector<double> distances;
    int k = 0;                     // requested size

    std::size_t size() const { return members.size(); }
};

// Brute-force scan of the search space, keeping the k smallest distances.
// Ties at the cut are broken by ascending row id, which makes the ranking
// total and the result deterministic. With epsilon set, members further
// than epsilon are dropped and the result may be shorter than k.
inline Neighborhood top_k_neighbors(std::span<const double> center,
                                    const std::vector<int>& space, const Dataset& d,
                                    int k, const DistanceContext& ctx,
                                    std::optional<double> epsilon = {}) {
    if (k < 1) throw Error("top_k_neighbors: k must be >= 1");
    if (space.empty()) throw Error("top_k_neighbors: empty search space");

    std::vector<std::pair<double, int>> cands;
    cands.reserve(space.size());
    for (int id : space) {
        const double dist = gower_distance(center, d.rows[id].x, ctx);
        if (epsilon && dist > *epsilon) continue;
        cands.emplace_back(dist, id);
    }
    const std::size_t keep = std::min<std::size_t>(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end());
    cands.resize(keep);

    Neighborhood nb;
    nb.k = k;
    nb.members.reserve(keep);
    nb.distances.reserve(keep);
    for (const auto& [dist, id] : cands) {
        nb.members.push_back(id);
        nb.distances.push_back(dist);
    }
    return nb;
}

struct Groups {
    Neighborhood control;
    Neighborhood test;
};

// Control group around the factual record within the protected space; test
// group around the counterfactual (CST) or the factual record itself (ST)
// within the non-protected space. The complainant is a member of its own
// control space and is retained here; detectors apply the center
// inclusion/exclusion convention downstream.
inline Groups build_groups(int complainant, const CfDataset& cf, const Dataset& d,
                           const std::string& attr, int k, const DistanceContext& ctx,
                           std::optional<double> epsilon = {},
                           bool st_test_center = false) {
    const int p = d.schema.protected_index(attr);
    if (p < 0) throw DataError("unknown protected attribute: " + attr);
    if (!d.rows[complainant].a[p])
        throw Error("complainant " + std::to_string(complainant) +
                    " does not have protected status on " + attr);
    const auto spaces = partition_search_spaces(d, attr);

    Groups g;
    g.control = top_k_neighbors(d.rows[complainant].x, spaces.control, d, k, ctx, epsilon);
    g.control.center_kind = CenterKind::factual;
    if (st_test_center) {
        g.test = top_k_neighbors(d.rows[complainant].x, spaces.test, d, k, ctx, epsilon);
        g.test.center_kind = CenterKind::factual;
    } else {
        const CfRecord* twin = cf.for_source(complainant);
        if (!twin)
            throw Error("no counterfactual row for complainant " +
                        std::to_string(complainant));
        g.test = top_k_neighbors(twin->x, spaces.test, d, k, ctx, epsilon);
        g.test.center_kind = CenterKind::counterfactual;
    }
    return g;
}

}  // namespace cst
