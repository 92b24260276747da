#pragma once

// Regularized incomplete beta function and the Beta distribution.

#include <cmath>
#include <limits>

#include "carscore/error.hpp"

namespace carscore::special {

inline double log_gamma(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double log_beta(double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); }

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz. Converges fast for
// x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    fail(ErrorCode::InvalidParameters, "incomplete beta continued fraction did not converge");
}

// Lower and upper regularized tails, each evaluated on the side where the
// continued fraction converges so that small tails keep relative accuracy.
struct Tails {
    double lower;
    double upper;
};

inline Tails beta_tails(double x, double a, double b) {
    require(a > 0.0 && b > 0.0, ErrorCode::InvalidParameters, "beta shape parameters must be positive");
    if (x <= 0.0) return {0.0, 1.0};
    if (x >= 1.0) return {1.0, 0.0};
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double lower = std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
        return {lower, 1.0 - lower};
    }
    const double upper = std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
    return {1.0 - upper, upper};
}

}  // namespace detail

/// I_x(a, b).
inline double beta_cdf(double x, double a, double b) { return detail::beta_tails(x, a, b).lower; }

/// 1 - I_x(a, b), computed without cancellation when small.
inline double beta_sf(double x, double a, double b) { return detail::beta_tails(x, a, b).upper; }

inline double beta_pdf(double x, double a, double b) {
    require(a > 0.0 && b > 0.0, ErrorCode::InvalidParameters, "beta shape parameters must be positive");
    if (x < 0.0 || x > 1.0) return 0.0;
    if ((x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0)) return std::numeric_limits<double>::infinity();
    if ((x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0)) return 0.0;
    const double lx = x == 0.0 ? 0.0 : (a - 1.0) * std::log(x);
    const double l1x = x == 1.0 ? 0.0 : (b - 1.0) * std::log1p(-x);
    return std::exp(lx + l1x - log_beta(a, b));
}

namespace detail {

// Bisection on [0, 1] for a monotone function of x; stops at double resolution.
template <typename Below>
double bisect_unit(Below below_target) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (below_target(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// x with I_x(a, b) = p.
inline double beta_quantile(double p, double a, double b) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidParameters, "probability outside [0, 1]");
    require(a > 0.0 && b > 0.0, ErrorCode::InvalidParameters, "beta shape parameters must be positive");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    return detail::bisect_unit([&](double x) { return beta_cdf(x, a, b) < p; });
}

/// x with 1 - I_x(a, b) = q; keeps relative accuracy for small x.
inline double beta_upper_quantile(double q, double a, double b) {
    require(q >= 0.0 && q <= 1.0, ErrorCode::InvalidParameters, "probability outside [0, 1]");
    require(a > 0.0 && b > 0.0, ErrorCode::InvalidParameters, "beta shape parameters must be positive");
    if (q == 1.0) return 0.0;
    if (q == 0.0) return 1.0;
    return detail::bisect_unit([&](double x) { return beta_sf(x, a, b) > q; });
}

}  // namespace carscore::special
