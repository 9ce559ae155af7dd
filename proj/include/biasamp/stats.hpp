#pragma once

#include <cstddef>
#include <span>

namespace biasamp {

double log_beta(double a, double b);

/// I_x(a, b) via the Lentz continued fraction; absolute error ~1e-14.
double regularized_incomplete_beta(double x, double a, double b);

/// Two-sided p-value of a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// Sample Pearson correlation; p from t = r*sqrt((n-2)/(1-r^2)) against
/// Student-t with n-2 degrees of freedom. Requires n >= 3 and nonzero
/// variance in both inputs.
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

/// One-sample two-sided t-test of mean == mu0. Requires n >= 2 and nonzero
/// sample variance.
TTestResult one_sample_ttest(std::span<const double> values, double mu0 = 0.0);

}  // namespace biasamp
