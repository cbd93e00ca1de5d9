#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cst/stats.hpp"

using namespace cst;

TEST_CASE("normal quantile hits the standard critical values") {
    CHECK(std::fabs(z_upper(0.05) - 1.6449) < 1e-4);
    CHECK(std::fabs(z_upper(0.025) - 1.9600) < 1e-4);
    CHECK(std::fabs(normal_quantile(0.5)) < 1e-12);
    CHECK(normal_quantile(0.975) == Catch::Approx(1.959963985).epsilon(1e-9));
}

TEST_CASE("normal quantile round-trips against erfc") {
    auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> unif(1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 2000; ++i) {
        const double p = unif(gen);
        CHECK(phi(normal_quantile(p)) == Catch::Approx(p).margin(1e-10));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
    CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("negative rate with and without the center") {
    CHECK(negative_rate(9, 15, false, 0) == Catch::Approx(0.6));
    // 12 negatives among 15 members plus a negative center: 13/16
    CHECK(negative_rate(12, 15, true, 0) == Catch::Approx(13.0 / 16.0));
    CHECK(negative_rate(0, 15, true, 1) == 0.0);
    CHECK_THROWS_AS(negative_rate(0, 0, false, 0), Error);
    CHECK(negative_rate(0, 0, true, 0) == 1.0);
}

// Published interval endpoints for k = 15 with centers included (m = 16),
// alpha = 0.05. The p values are the exact count fractions behind the
// rounded table entries.
TEST_CASE("one-sided lower bounds match the published cases") {
    CHECK(one_sided_lower(13.0 / 16.0, 0.0, 16, 0.05) == Catch::Approx(0.65).margin(0.005));
    CHECK(one_sided_lower(1.0, 0.0, 16, 0.05) == Catch::Approx(1.0).margin(1e-12));
    CHECK(one_sided_lower(9.0 / 16.0, 0.0, 16, 0.05) == Catch::Approx(0.36).margin(0.005));
}

TEST_CASE("two-sided intervals match the published cases") {
    const Interval a = two_sided_ci(13.0 / 16.0, 0.0, 16, 0.05);
    CHECK(a.lo == Catch::Approx(0.62).margin(0.005));
    CHECK(a.hi == 1.0);  // clipped from 1.004

    const Interval b = two_sided_ci(1.0, 15.0 / 16.0, 16, 0.05);
    CHECK(b.lo == Catch::Approx(-0.06).margin(0.005));
    CHECK(b.hi == Catch::Approx(0.18).margin(0.005));

    const Interval sym = two_sided_ci(0.4, 0.4, 20, 0.05);
    CHECK(sym.lo == Catch::Approx(-sym.hi).margin(1e-12));
}

TEST_CASE("detection decisions") {
    CHECK(decide(0.56, 0.36, 0.0).detected);
    CHECK(decide(0.56, 0.36, 0.0).significant);
    CHECK(decide(0.06, -0.04, 0.0).detected);
    CHECK_FALSE(decide(0.06, -0.04, 0.0).significant);
    CHECK_FALSE(decide(0.0, -0.1, 0.0).detected);  // strict inequality at tau
    CHECK_FALSE(decide(0.0, -0.1, 0.0).significant);
}

TEST_CASE("positive-direction decisions") {
    // p_c = 0.2, p_t = 0.7: delta = -0.5, upper = -0.5 + w < 0
    const Decision strong = decide_positive(-0.5, 0.2, 0.7, 16, 0.05, 0.0);
    CHECK(strong.detected);
    CHECK(strong.significant);
    CHECK(-0.5 + wald_width(0.2, 0.7, 16, 0.05) == Catch::Approx(-0.24986).margin(1e-4));

    const Decision wrong_sign = decide_positive(0.1, 0.5, 0.4, 16, 0.05, 0.0);
    CHECK_FALSE(wrong_sign.detected);
    CHECK_FALSE(wrong_sign.significant);

    // detected but the reflected interval covers tau
    const Decision weak = decide_positive(-0.05, 0.45, 0.5, 16, 0.05, 0.0);
    CHECK(weak.detected);
    CHECK_FALSE(weak.significant);
}

TEST_CASE("significant implies detected over randomized inputs") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> msize(1, 400);
    for (int i = 0; i < 4000; ++i) {
        const double p_c = unif(gen);
        const double p_t = unif(gen);
        const int m = msize(gen);
        const double alpha = 0.001 + 0.499 * unif(gen);
        const double tau = 2.0 * unif(gen) - 1.0;
        const double delta = p_c - p_t;
        const double lo = one_sided_lower(p_c, p_t, m, alpha);
        const Interval two = two_sided_ci(p_c, p_t, m, alpha);
        const Decision neg = decide(delta, lo, tau);
        const Decision pos = decide_positive(delta, p_c, p_t, m, alpha, tau);
        REQUIRE(lo <= delta + 1e-15);
        REQUIRE(two.lo <= delta + 1e-15);
        REQUIRE((two.hi >= delta - 1e-15 || two.hi == 1.0));
        REQUIRE(two.lo >= -1.0);
        REQUIRE(two.hi <= 1.0);
        if (neg.significant) REQUIRE(neg.detected);
        if (pos.significant) REQUIRE(pos.detected);
    }
}

TEST_CASE("interval width shrinks as the group grows") {
    std::mt19937 gen(13);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double p_c = unif(gen);
        const double p_t = unif(gen);
        const int m1 = 1 + static_cast<int>(unif(gen) * 100);
        const int m2 = m1 + 1 + static_cast<int>(unif(gen) * 100);
        const double w1 = wald_width(p_c, p_t, m1, 0.05);
        const double w2 = wald_width(p_c, p_t, m2, 0.05);
        if (w1 == 0.0) REQUIRE(w2 == 0.0);  // both variances zero
        else REQUIRE(w2 < w1);
    }
}
