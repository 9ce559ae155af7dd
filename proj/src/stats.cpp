#include "biasamp/stats.hpp"

#include <cmath>
#include <stdexcept>

#include "biasamp/errors.hpp"

namespace biasamp {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

namespace {

// Continued fraction for the incomplete beta function, evaluated with the
// modified Lentz algorithm. Converges quickly for x < (a+1)/(a+b+2).
double ibeta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || std::isnan(x))
        throw std::invalid_argument("regularized_incomplete_beta: invalid arguments");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(ln_front) * ibeta_cf(x, a, b) / a;
    return 1.0 - std::exp(ln_front) * ibeta_cf(1.0 - x, b, a) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_two_sided_p: df must be positive");
    if (std::isinf(t)) return 0.0;
    const double t2 = t * t;
    return regularized_incomplete_beta(df / (df + t2), 0.5 * df, 0.5);
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("pearson: input lengths differ");
    const std::size_t n = xs.size();
    if (n < 3) throw std::invalid_argument("pearson: need at least 3 pairs");

    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += xs[i];
        mean_y += ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = ys[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero-variance input");

    PearsonResult result;
    result.n = n;
    result.r = sxy / std::sqrt(sxx * syy);
    if (result.r > 1.0) result.r = 1.0;
    if (result.r < -1.0) result.r = -1.0;
    const double denom = 1.0 - result.r * result.r;
    if (denom <= 0.0) {
        result.p = 0.0;
    } else {
        const double df = static_cast<double>(n - 2);
        const double t = result.r * std::sqrt(df / denom);
        result.p = student_t_two_sided_p(t, df);
    }
    return result;
}

TTestResult one_sample_ttest(std::span<const double> values, double mu0) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("one_sample_ttest: need at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) {
        const double d = v - mean;
        ss += d * d;
    }
    if (ss == 0.0) throw DataError("one_sample_ttest: zero-variance input");
    const double variance = ss / static_cast<double>(n - 1);
    TTestResult result;
    result.df = static_cast<double>(n - 1);
    result.t = (mean - mu0) / std::sqrt(variance / static_cast<double>(n));
    result.p = student_t_two_sided_p(result.t, result.df);
    return result;
}

}  // namespace biasamp
