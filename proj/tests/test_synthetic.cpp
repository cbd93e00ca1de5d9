#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cst/synthetic.hpp"

using namespace cst;

TEST_CASE("identical seeds give identical datasets") {
    LoanScenarioParams p;
    p.n = 800;
    const LoanData a = generate_loan(p);
    const LoanData b = generate_loan(p);
    REQUIRE(a.dataset.n() == b.dataset.n());
    for (std::size_t i = 0; i < a.dataset.n(); ++i) {
        REQUIRE(a.dataset.rows[i].x == b.dataset.rows[i].x);
        REQUIRE(a.dataset.rows[i].a == b.dataset.rows[i].a);
        REQUIRE(a.dataset.rows[i].y_hat == b.dataset.rows[i].y_hat);
    }
    LoanScenarioParams q = p;
    q.seed += 1;
    const LoanData c = generate_loan(q);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.dataset.n() && !any_diff; ++i)
        any_diff = a.dataset.rows[i].x != c.dataset.rows[i].x;
    CHECK(any_diff);
}

TEST_CASE("stored draws regenerate every row exactly") {
    LoanScenarioParams p;
    p.n = 500;
    const LoanData data = generate_loan(p);
    for (std::size_t i = 0; i < data.dataset.n(); ++i) {
        const auto [x1, x2] = loan_features_from_draws(
            p, data.draws.a[i], data.draws.u1[i], data.draws.u2[i],
            data.draws.salary_pen_draw[i], data.draws.balance_pen_draw[i]);
        REQUIRE(x1 == data.dataset.rows[i].x[0]);
        REQUIRE(x2 == data.dataset.rows[i].x[1]);
    }
}

TEST_CASE("penalties push the protected group down") {
    LoanScenarioParams p;
    const LoanData data = generate_loan(p);
    double m1[2] = {0, 0}, m2[2] = {0, 0};
    int n[2] = {0, 0};
    for (const auto& r : data.dataset.rows) {
        m1[r.a[0]] += r.x[0];
        m2[r.a[0]] += r.x[1];
        ++n[r.a[0]];
    }
    REQUIRE(n[0] > 0);
    REQUIRE(n[1] > 0);
    CHECK(m1[1] / n[1] < m1[0] / n[0]);
    CHECK(m2[1] / n[1] < m2[0] / n[0]);
}

TEST_CASE("loan shares land on the documented marginals") {
    const LoanData data = generate_loan(LoanScenarioParams{});
    int females = 0, accepted = 0;
    for (const auto& r : data.dataset.rows) {
        females += r.a[0];
        accepted += r.y_hat;
    }
    const double share = double(females) / double(data.dataset.n());
    CHECK(share == Catch::Approx(0.343).margin(0.02));

    const auto rates = demographic_parity(data.dataset, "Gender");
    CHECK(rates.rate_protected == Catch::Approx(0.135).margin(0.03));
    CHECK(rates.rate_nonprotected == Catch::Approx(0.40).margin(0.03));
}

TEST_CASE("zero penalties make counterfactuals equal the factuals") {
    LoanScenarioParams p;
    p.n = 400;
    p.salary_penalty = 0.0;
    p.balance_penalty = 0.0;
    const LoanData data = generate_loan(p);
    const CfDataset cf = generate_counterfactual_dataset(
        data.ground_truth, data.dataset, {{"Gender", 0.0}}, data.classifier,
        &data.noise);
    for (const auto& r : cf.rows) {
        REQUIRE(r.x[0] == data.dataset.rows[r.source].x[0]);
        REQUIRE(r.x[1] == data.dataset.rows[r.source].x[1]);
        REQUIRE(r.y_hat == data.dataset.rows[r.source].y_hat);
    }
}

TEST_CASE("stored-noise counterfactuals strip exactly the penalty terms") {
    LoanScenarioParams p;
    p.n = 600;
    const LoanData data = generate_loan(p);
    const CfDataset cf = generate_counterfactual_dataset(
        data.ground_truth, data.dataset, {{"Gender", 0.0}}, data.classifier,
        &data.noise);
    for (const auto& r : cf.rows) {
        const auto [x1, x2] = loan_features_from_draws(
            p, 0, data.draws.u1[r.source], data.draws.u2[r.source],
            data.draws.salary_pen_draw[r.source], data.draws.balance_pen_draw[r.source]);
        REQUIRE(r.x[0] == Catch::Approx(x1).margin(1e-9));
        REQUIRE(r.x[1] == Catch::Approx(x2).margin(1e-9));
        // removing the penalty can only raise the score
        REQUIRE(r.x[0] >= data.dataset.rows[r.source].x[0] - 1e-9);
    }
}

TEST_CASE("classifier arithmetic at the published operating points") {
    LoanScenarioParams p;  // threshold 225000 as published
    const Classifier loan = loan_classifier(p);
    const Schema ls = loan_schema();
    CHECK(classify(loan, std::vector<double>{100000.0, 30000.0}, ls) == 1);
    CHECK(classify(loan, std::vector<double>{35000.0, 7048.0}, ls) == 0);
    // boundary is strict
    CHECK(classify(loan, std::vector<double>{25000.0, 40000.0}, ls) == 0);

    SchoolScenarioParams sp;
    const Classifier school = school_classifier(sp);
    const Schema ss = school_schema();
    // 0.6 * 3.93 + 0.4 * 46.1 = 20.798, not strictly above 20.8
    CHECK(classify(school, std::vector<double>{3.93, 46.1}, ss) == 0);
    CHECK(classify(school, std::vector<double>{3.93, 46.2}, ss) == 1);

    Classifier missing;
    missing.weights = {{"Nope", 1.0}};
    CHECK_THROWS_AS(classify(missing, std::vector<double>{1.0, 2.0}, ls), ConfigError);
}

TEST_CASE("school stand-in marginals and selectivity") {
    const SchoolData data = generate_school_standin(SchoolScenarioParams{});
    int nw = 0, f = 0, nwf = 0, admitted = 0;
    for (const auto& r : data.dataset.rows) {
        nw += r.a[0];
        f += r.a[1];
        nwf += r.a[0] & r.a[1];
        admitted += r.y_hat;
    }
    const double n = double(data.dataset.n());
    CHECK(nw / n == Catch::Approx(0.161).margin(0.015));
    CHECK(f / n == Catch::Approx(0.438).margin(0.015));
    CHECK(nwf / n == Catch::Approx(0.084).margin(0.01));
    CHECK(admitted / n == Catch::Approx(0.023).margin(0.01));
    // LSAT stays strictly positive (log link requirement)
    for (const auto& r : data.dataset.rows) REQUIRE(r.x[1] >= 1.0);
}

TEST_CASE("zero causal coefficients produce parity") {
    SchoolScenarioParams p;
    p.n = 20000;
    p.ugpa_race = 0.0;
    p.ugpa_gender = 0.0;
    p.lsat_log_race = 0.0;
    p.lsat_log_gender = 0.0;
    const SchoolData data = generate_school_standin(p);
    const auto rates = demographic_parity(data.dataset, "R");
    CHECK(std::fabs(rates.rate_protected - rates.rate_nonprotected) < 0.01);
}

TEST_CASE("parameter validation") {
    LoanScenarioParams bad;
    bad.n = 0;
    CHECK_THROWS_AS(generate_loan(bad), ConfigError);
    LoanScenarioParams neg;
    neg.u1_scale = -1.0;
    CHECK_THROWS_AS(generate_loan(neg), ConfigError);
    SchoolScenarioParams joint;
    joint.p_joint = 0.5;  // exceeds the race marginal
    CHECK_THROWS_AS(generate_school_standin(joint), ConfigError);
}
