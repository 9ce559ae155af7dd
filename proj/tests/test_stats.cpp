#include <doctest.h>

#include <cmath>
#include <vector>

#include "biasamp/errors.hpp"
#include "biasamp/stats.hpp"
#include "stats_reference.hpp"

using namespace biasamp;

TEST_SUITE("stats") {

TEST_CASE("regularized incomplete beta basics") {
    CHECK(regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0);
    // I_x(1,1) = x
    for (double x : {0.1, 0.25, 0.5, 0.75, 0.9})
        CHECK(regularized_incomplete_beta(x, 1.0, 1.0) == doctest::Approx(x).epsilon(1e-12));
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
    for (double x : {0.05, 0.3, 0.6, 0.95})
        CHECK(regularized_incomplete_beta(x, 2.5, 4.0) ==
              doctest::Approx(1.0 - regularized_incomplete_beta(1.0 - x, 4.0, 2.5))
                  .epsilon(1e-12));
    CHECK_THROWS_AS(regularized_incomplete_beta(0.5, -1.0, 2.0), std::invalid_argument);
}

TEST_CASE("student t two-sided p-values") {
    CHECK(student_t_two_sided_p(0.0, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(student_t_two_sided_p(3.4641016151377544, 2.0) ==
          doctest::Approx(0.07417990022744855).epsilon(1e-10));
    CHECK(student_t_two_sided_p(-3.4641016151377544, 2.0) ==
          doctest::Approx(0.07417990022744855).epsilon(1e-10));
    CHECK(student_t_two_sided_p(std::numeric_limits<double>::infinity(), 5.0) == 0.0);
}

TEST_CASE("pearson exact fixtures") {
    const std::vector<double> xs = {1.0, 2.0, 3.0};
    const std::vector<double> ys = {2.0, 4.0, 6.0};
    const auto up = pearson(xs, ys);
    CHECK(up.r == 1.0);  // exactly
    CHECK(up.p == 0.0);
    const std::vector<double> neg = {-1.0, -2.0, -3.0};
    CHECK(pearson(xs, neg).r == -1.0);
}

TEST_CASE("pearson matches the reference implementation") {
    for (const auto& c : fixtures::pearson_cases()) {
        const auto got = pearson(c.xs, c.ys);
        CHECK(std::fabs(got.r - c.r) < 1e-9);
        CHECK(std::fabs(got.p - c.p) < 1e-6);
        CHECK(got.n == c.xs.size());
    }
}

TEST_CASE("pearson input validation") {
    const std::vector<double> xs = {1.0, 2.0};
    const std::vector<double> ys = {2.0, 4.0};
    CHECK_THROWS_AS(pearson(xs, ys), std::invalid_argument);  // too short
    const std::vector<double> flat = {5.0, 5.0, 5.0};
    const std::vector<double> vary = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pearson(flat, vary), DataError);
    CHECK_THROWS_AS(pearson(vary, flat), DataError);
    const std::vector<double> shorter = {1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(pearson(shorter, vary), std::invalid_argument);
}

TEST_CASE("one-sample t-test trivial fixtures") {
    const std::vector<double> symmetric = {-1.0, 0.0, 1.0};
    const auto sym = one_sample_ttest(symmetric, 0.0);
    CHECK(sym.t == 0.0);
    CHECK(sym.p == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> simple = {1.0, 2.0, 3.0};
    const auto got = one_sample_ttest(simple, 0.0);
    CHECK(got.t == doctest::Approx(3.4641016151377544).epsilon(1e-12));
    CHECK(got.df == 2.0);
}

TEST_CASE("one-sample t-test matches the reference implementation") {
    for (const auto& c : fixtures::ttest_cases()) {
        const auto got = one_sample_ttest(c.values, c.mu0);
        CHECK(std::fabs(got.t - c.t) < 1e-9);
        CHECK(std::fabs(got.p - c.p) < 1e-6);
        CHECK(got.df == c.df);
    }
}

TEST_CASE("one-sample t-test input validation") {
    const std::vector<double> one = {1.0};
    CHECK_THROWS_AS(one_sample_ttest(one, 0.0), std::invalid_argument);
    const std::vector<double> flat = {2.0, 2.0, 2.0};
    CHECK_THROWS_AS(one_sample_ttest(flat, 0.0), DataError);
}

}  // TEST_SUITE
