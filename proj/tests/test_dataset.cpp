#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "cst/dataset.hpp"

using namespace cst;

namespace {

Schema loan_like_schema() {
    Schema s;
    s.features = {{"AnnualSalary", FeatureKind::continuous, {}},
                  {"AccountBalance", FeatureKind::continuous, {}}};
    s.protected_attrs = {{"Gender", "1", "0"}};
    s.decision = "LoanApproved";
    return s;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

Dataset toy_dataset(const std::vector<std::uint8_t>& a,
                    const std::vector<std::uint8_t>& y) {
    Dataset d;
    d.schema = loan_like_schema();
    for (std::size_t i = 0; i < a.size(); ++i) {
        Record r;
        r.x = {double(i), double(i) * 2.0};
        r.a = {a[i]};
        r.y_hat = y[i];
        d.rows.push_back(r);
    }
    d.compute_stats();
    return d;
}

}  // namespace

TEST_CASE("load a well-formed CSV") {
    const auto path = write_temp("cst_ok.csv",
                                 "AnnualSalary,AccountBalance,Gender,LoanApproved\n"
                                 "35000,7048,1,0\n"
                                 "52000,20010.5,0,1\n"
                                 "41000,-120,0,0\n");
    const Dataset d = load_dataset(path, loan_like_schema());
    REQUIRE(d.n() == 3);
    CHECK(d.rows[0].x[0] == 35000.0);
    CHECK(d.rows[0].a[0] == 1);
    CHECK(d.rows[1].y_hat == 1);
    CHECK(d.stats[0].min == 35000.0);
    CHECK(d.stats[0].max == 52000.0);
    CHECK(d.stats[1].min == -120.0);
}

TEST_CASE("empty file with a valid header loads zero rows") {
    const auto path =
        write_temp("cst_empty.csv", "AnnualSalary,AccountBalance,Gender,LoanApproved\n");
    const Dataset d = load_dataset(path, loan_like_schema());
    CHECK(d.n() == 0);
}

TEST_CASE("validation errors name the row and column") {
    const auto bad_prot = write_temp("cst_badprot.csv",
                                     "AnnualSalary,AccountBalance,Gender,LoanApproved\n"
                                     "35000,7048,1,0\n"
                                     "52000,20010,2,1\n");
    try {
        load_dataset(bad_prot, loan_like_schema());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("Gender") != std::string::npos);
    }

    const auto bad_cell = write_temp("cst_badcell.csv",
                                     "AnnualSalary,AccountBalance,Gender,LoanApproved\n"
                                     "oops,7048,1,0\n");
    CHECK_THROWS_AS(load_dataset(bad_cell, loan_like_schema()), DataError);

    const auto missing_col = write_temp("cst_missingcol.csv",
                                        "AnnualSalary,Gender,LoanApproved\n"
                                        "35000,1,0\n");
    CHECK_THROWS_AS(load_dataset(missing_col, loan_like_schema()), DataError);

    const auto missing_val = write_temp("cst_missingval.csv",
                                        "AnnualSalary,AccountBalance,Gender,LoanApproved\n"
                                        "35000,,1,0\n");
    CHECK_THROWS_AS(load_dataset(missing_val, loan_like_schema()), DataError);

    const auto bad_dec = write_temp("cst_baddec.csv",
                                    "AnnualSalary,AccountBalance,Gender,LoanApproved\n"
                                    "35000,7048,1,yes\n");
    CHECK_THROWS_AS(load_dataset(bad_dec, loan_like_schema()), DataError);
}

TEST_CASE("categorical features code by declared or first-seen levels") {
    Schema s;
    s.features = {{"color", FeatureKind::categorical, {"red", "blue", "green"}},
                  {"v", FeatureKind::continuous, {}}};
    s.protected_attrs = {{"A", "1", "0"}};
    s.decision = "Y";
    const auto path = write_temp("cst_cat.csv",
                                 "color,v,A,Y\n"
                                 "blue,1,0,1\n"
                                 "red,2,1,0\n");
    const Dataset d = load_dataset(path, s);
    CHECK(d.rows[0].x[0] == 1.0);  // blue is level 1 by declaration
    CHECK(d.rows[1].x[0] == 0.0);

    const auto bad = write_temp("cst_cat_bad.csv",
                                "color,v,A,Y\n"
                                "mauve,1,0,1\n");
    CHECK_THROWS_AS(load_dataset(bad, s), DataError);
}

TEST_CASE("partition splits by protected status") {
    const Dataset d = toy_dataset({1, 0, 1, 0}, {1, 0, 0, 0});
    const auto spaces = partition_search_spaces(d, "Gender");
    CHECK(spaces.control == std::vector<int>{0, 2});
    CHECK(spaces.test == std::vector<int>{1, 3});
    CHECK_THROWS_AS(partition_search_spaces(d, "Nope"), DataError);

    const Dataset all_prot = toy_dataset({1, 1}, {1, 0});
    const auto degenerate = partition_search_spaces(all_prot, "Gender");
    CHECK(degenerate.control.size() == 2);
    CHECK(degenerate.test.empty());
}

TEST_CASE("partition property on random datasets") {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + int(gen() % 50);
        std::vector<std::uint8_t> a(n), y(n);
        for (int i = 0; i < n; ++i) {
            a[i] = gen() % 2;
            y[i] = gen() % 2;
        }
        const Dataset d = toy_dataset(a, y);
        const auto spaces = partition_search_spaces(d, "Gender");
        REQUIRE(spaces.control.size() + spaces.test.size() == d.n());
        for (int id : spaces.control) REQUIRE(d.rows[id].a[0] == 1);
        for (int id : spaces.test) REQUIRE(d.rows[id].a[0] == 0);
    }
}

TEST_CASE("intersection attribute is the conjunction") {
    Dataset d;
    d.schema = loan_like_schema();
    d.schema.protected_attrs = {{"R", "1", "0"}, {"G", "1", "0"}};
    const std::vector<std::pair<int, int>> combos = {{1, 1}, {1, 0}, {0, 1}, {0, 0}};
    for (auto [r, g] : combos) {
        Record rec;
        rec.x = {0.0, 0.0};
        rec.a = {std::uint8_t(r), std::uint8_t(g)};
        rec.y_hat = 0;
        d.rows.push_back(rec);
    }
    d.compute_stats();

    const Dataset d2 = derive_intersection_attribute(d, {"R", "G"});
    REQUIRE(d2.schema.protected_attrs.size() == 3);
    CHECK(d2.schema.protected_attrs[2].name == "R_x_G");
    CHECK(d2.rows[0].a[2] == 1);
    CHECK(d2.rows[1].a[2] == 0);
    CHECK(d2.rows[2].a[2] == 0);
    CHECK(d2.rows[3].a[2] == 0);
    // original columns preserved
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        CHECK(d2.rows[i].a[0] == d.rows[i].a[0]);
        CHECK(d2.rows[i].a[1] == d.rows[i].a[1]);
    }

    CHECK_THROWS_AS(derive_intersection_attribute(d, {"R"}), ConfigError);
    CHECK_THROWS_AS(derive_intersection_attribute(d, {"R", "R"}), ConfigError);

    // exhaustive conjunction check on random data
    std::mt19937 gen(17);
    Dataset big;
    big.schema = d.schema;
    for (int i = 0; i < 500; ++i) {
        Record rec;
        rec.x = {0.0, 0.0};
        rec.a = {std::uint8_t(gen() % 2), std::uint8_t(gen() % 2)};
        rec.y_hat = std::uint8_t(gen() % 2);
        big.rows.push_back(rec);
    }
    big.compute_stats();
    const Dataset big2 = derive_intersection_attribute(big, {"R", "G"});
    for (std::size_t i = 0; i < big2.rows.size(); ++i)
        REQUIRE(big2.rows[i].a[2] == (big2.rows[i].a[0] & big2.rows[i].a[1]));
}

TEST_CASE("demographic parity rates") {
    const Dataset toy = toy_dataset({1, 1, 0, 0}, {1, 0, 0, 0});
    const auto rates = demographic_parity(toy, "Gender");
    CHECK(rates.rate_protected == Catch::Approx(0.5));
    CHECK(rates.rate_nonprotected == Catch::Approx(0.0));

    const Dataset all_pos = toy_dataset({1, 0}, {1, 1});
    const auto ones = demographic_parity(all_pos, "Gender");
    CHECK(ones.rate_protected == 1.0);
    CHECK(ones.rate_nonprotected == 1.0);

    const Dataset one_sided = toy_dataset({1, 1}, {1, 0});
    CHECK_THROWS_AS(demographic_parity(one_sided, "Gender"), DataError);
}

TEST_CASE("normalization stats ignore row order") {
    std::mt19937 gen(23);
    std::vector<std::uint8_t> a(40), y(40);
    for (int i = 0; i < 40; ++i) {
        a[i] = gen() % 2;
        y[i] = gen() % 2;
    }
    Dataset d = toy_dataset(a, y);
    for (auto& r : d.rows) r.x = {double(gen() % 1000), double(gen() % 1000)};
    d.compute_stats();

    Dataset shuffled = d;
    std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), gen);
    shuffled.compute_stats();
    for (std::size_t f = 0; f < d.stats.size(); ++f) {
        REQUIRE(d.stats[f].min == shuffled.stats[f].min);
        REQUIRE(d.stats[f].max == shuffled.stats[f].max);
    }
}

TEST_CASE("schema validation") {
    Schema s = loan_like_schema();
    s.features.push_back({"Gender", FeatureKind::continuous, {}});
    CHECK_THROWS_AS(s.validate(), ConfigError);

    Schema empty;
    empty.decision = "Y";
    empty.protected_attrs = {{"A", "1", "0"}};
    CHECK_THROWS_AS(empty.validate(), ConfigError);
}
