#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "cst/neighbors.hpp"

using namespace cst;

namespace {

Schema mixed_schema() {
    Schema s;
    s.features = {{"cat", FeatureKind::categorical, {}},
                  {"v1", FeatureKind::continuous, {}},
                  {"v2", FeatureKind::ordinal, {}}};
    s.protected_attrs = {{"A", "1", "0"}};
    s.decision = "Y";
    return s;
}

Dataset random_mixed(int n, std::uint32_t seed) {
    std::mt19937 gen(seed);
    Dataset d;
    d.schema = mixed_schema();
    for (int i = 0; i < n; ++i) {
        Record r;
        // coarse grids on purpose: ties must be common
        r.x = {double(gen() % 3), double(gen() % 20) * 0.5, double(gen() % 5)};
        r.a = {std::uint8_t(gen() % 2)};
        r.y_hat = std::uint8_t(gen() % 2);
        d.rows.push_back(r);
    }
    d.compute_stats();
    return d;
}

// independent oracle: full sort over the whole space
std::vector<int> brute_force(const std::vector<double>& center,
                             const std::vector<int>& space, const Dataset& d, int k,
                             const DistanceContext& ctx,
                             std::optional<double> epsilon = {}) {
    std::vector<std::pair<double, int>> all;
    for (int id : space) {
        const double dist = gower_distance(center, d.rows[id].x, ctx);
        if (epsilon && dist > *epsilon) continue;
        all.emplace_back(dist, id);
    }
    std::sort(all.begin(), all.end());
    std::vector<int> ids;
    for (std::size_t i = 0; i < all.size() && int(i) < k; ++i) ids.push_back(all[i].second);
    return ids;
}

}  // namespace

TEST_CASE("selection equals full-sort brute force including tie order") {
    const Dataset d = random_mixed(200, 314);
    const DistanceContext ctx = DistanceContext::for_dataset(d);
    std::vector<int> space(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) space[i] = int(i);

    std::mt19937 gen(77);
    for (int k : {1, 5, 15}) {
        for (int q = 0; q < 50; ++q) {
            const int probe = gen() % d.n();
            const auto nb = top_k_neighbors(d.rows[probe].x, space, d, k, ctx);
            REQUIRE(nb.members == brute_force(d.rows[probe].x, space, d, k, ctx));
            // distances ascending
            for (std::size_t i = 1; i < nb.distances.size(); ++i)
                REQUIRE(nb.distances[i - 1] <= nb.distances[i]);
        }
    }
}

TEST_CASE("candidate order does not matter") {
    const Dataset d = random_mixed(120, 9);
    const DistanceContext ctx = DistanceContext::for_dataset(d);
    std::vector<int> space(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) space[i] = int(i);
    std::vector<int> shuffled = space;
    std::mt19937 gen(4);
    std::shuffle(shuffled.begin(), shuffled.end(), gen);

    const auto a = top_k_neighbors(d.rows[3].x, space, d, 10, ctx);
    const auto b = top_k_neighbors(d.rows[3].x, shuffled, d, 10, ctx);
    CHECK(a.members == b.members);
}

TEST_CASE("saturation and epsilon behavior") {
    const Dataset d = random_mixed(30, 21);
    const DistanceContext ctx = DistanceContext::for_dataset(d);
    std::vector<int> space = {2, 5, 7, 11};

    const auto all = top_k_neighbors(d.rows[0].x, space, d, 50, ctx);
    CHECK(all.members.size() == space.size());

    // epsilon = 0 keeps only exact duplicates of the center
    const std::vector<double> far = {99.0, 99.0, 99.0};
    const auto none = top_k_neighbors(far, space, d, 5, ctx, 0.0);
    CHECK(none.members.empty());

    const auto self_only = top_k_neighbors(d.rows[2].x, space, d, 5, ctx, 0.0);
    for (int id : self_only.members)
        CHECK(gower_distance(d.rows[2].x, d.rows[id].x, ctx) == 0.0);

    // epsilon filter agrees with the oracle
    const auto eps = top_k_neighbors(d.rows[2].x, space, d, 3, ctx, 0.2);
    CHECK(eps.members == brute_force(d.rows[2].x, space, d, 3, ctx, 0.2));

    CHECK_THROWS_AS(top_k_neighbors(d.rows[0].x, {}, d, 3, ctx), Error);
    CHECK_THROWS_AS(top_k_neighbors(d.rows[0].x, space, d, 0, ctx), Error);
}

TEST_CASE("membership ignores the decision labels") {
    Dataset d = random_mixed(100, 55);
    const DistanceContext ctx = DistanceContext::for_dataset(d);
    std::vector<int> space(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) space[i] = int(i);

    const auto before = top_k_neighbors(d.rows[10].x, space, d, 12, ctx);
    for (auto& r : d.rows) r.y_hat = std::uint8_t(1 - r.y_hat);
    const auto after = top_k_neighbors(d.rows[10].x, space, d, 12, ctx);
    CHECK(before.members == after.members);
}

TEST_CASE("build_groups pairs control and test searches") {
    // two features, protected rows clustered low, non-protected high
    Dataset d;
    d.schema = mixed_schema();
    d.schema.features = {{"x1", FeatureKind::continuous, {}},
                         {"x2", FeatureKind::continuous, {}}};
    auto add = [&](double x1, double x2, int a, int y) {
        Record r;
        r.x = {x1, x2};
        r.a = {std::uint8_t(a)};
        r.y_hat = std::uint8_t(y);
        d.rows.push_back(r);
    };
    add(35000, 7048, 1, 0);   // complainant (row 0)
    add(36000, 7200, 1, 0);
    add(34000, 6900, 1, 0);
    add(90000, 30000, 1, 1);
    add(50796, 13852, 0, 1);  // near the counterfactual center
    add(51000, 14000, 0, 1);
    add(36000, 7300, 0, 0);   // near the factual center
    add(35500, 7100, 0, 0);
    d.compute_stats();

    CfDataset cf;
    cf.schema = d.schema;
    cf.intervention = {{"A", 0.0}};
    CfRecord twin;
    twin.source = 0;
    twin.x = {50796.0, 13852.0};
    twin.a = {0};
    twin.y_hat = 1;
    cf.by_source[0] = 0;
    cf.rows.push_back(twin);

    const DistanceContext ctx = DistanceContext::for_dataset(d);
    const Groups cst_groups = build_groups(0, cf, d, "A", 2, ctx);
    // the complainant is retained in its own control scan at distance zero
    REQUIRE(cst_groups.control.members.front() == 0);
    CHECK(cst_groups.control.distances.front() == 0.0);
    CHECK(cst_groups.test.center_kind == CenterKind::counterfactual);
    // test search is anchored at the counterfactual, so the high rows win
    CHECK(cst_groups.test.members == std::vector<int>{4, 5});

    const Groups st_groups = build_groups(0, cf, d, "A", 2, ctx, {}, true);
    CHECK(st_groups.test.center_kind == CenterKind::factual);
    CHECK(st_groups.test.members == std::vector<int>{7, 6});
    // control groups coincide between ST and CST
    CHECK(st_groups.control.members == cst_groups.control.members);

    // space purity
    for (int id : cst_groups.control.members) CHECK(d.rows[id].a[0] == 1);
    for (int id : cst_groups.test.members) CHECK(d.rows[id].a[0] == 0);

    CHECK_THROWS_AS(build_groups(4, cf, d, "A", 2, ctx), Error);  // not protected
    CHECK_THROWS_AS(build_groups(1, cf, d, "A", 2, ctx), Error);  // no twin
}
