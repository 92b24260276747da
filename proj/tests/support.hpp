#pragma once

// Shared helpers for the test binaries: random instances, a Kolmogorov-Smirnov
// test and a numerical quadrature used as an independent oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "carscore/estimation.hpp"
#include "carscore/linalg.hpp"
#include "carscore/rng.hpp"

namespace testing_support {

using carscore::Index;
using carscore::Matrix;
using carscore::Vector;

inline Matrix normal_matrix(carscore::RandomStream& rng, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline Vector normal_vector(carscore::RandomStream& rng, Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

/// Random correlation matrix from the normalized Gram matrix of a random factor.
inline Matrix random_correlation(carscore::RandomStream& rng, Index d, Index extra = 3) {
    const Matrix f = normal_matrix(rng, d, d + extra);
    Matrix s = f * f.transpose();
    const Vector inv = s.diagonal().cwiseSqrt().cwiseInverse();
    s = inv.asDiagonal() * s * inv.asDiagonal();
    s = 0.5 * (s + s.transpose());
    s.diagonal().setOnes();
    return s;
}

inline Matrix autoregressive(Index d, double rho) {
    Matrix p(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) p(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
    return p;
}

/// Symmetric square root by Denman-Beavers iteration, independent of the
/// eigendecomposition route under test.
inline Matrix sqrtm_iterative(const Matrix& a) {
    Matrix y = a;
    Matrix z = Matrix::Identity(a.rows(), a.cols());
    for (int it = 0; it < 100; ++it) {
        const Matrix yi = y.inverse();
        const Matrix zi = z.inverse();
        const Matrix y_next = 0.5 * (y + zi);
        z = 0.5 * (z + yi);
        const double change = (y_next - y).norm();
        y = y_next;
        if (change < 1e-15 * y.norm()) break;
    }
    return 0.5 * (y + y.transpose());
}

/// Correlated design with a sparse linear response.
inline carscore::Dataset random_dataset(carscore::RandomStream& rng, Index n, Index d, double noise = 1.0) {
    const Matrix p = random_correlation(rng, d);
    const Eigen::LLT<Matrix> llt(p);
    const Matrix x = normal_matrix(rng, n, d) * Matrix(llt.matrixU());
    Vector b = Vector::Zero(d);
    for (Index j = 0; j < d; j += 2) b(j) = rng.normal() * 2.0;
    Vector y = x * b + noise * normal_vector(rng, n);
    y.array() += 1.5;
    return carscore::make_dataset(x, y);
}

/// Kolmogorov distribution upper tail P(sqrt(n) D > t) for large n.
inline double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

/// One-sample KS test with the asymptotic distribution and the usual
/// small-sample correction of the scale factor.
inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double en = std::sqrt(n);
    return {d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)};
}

/// Composite Gauss-Legendre quadrature (8 points per panel).
inline double integrate(const std::function<double(double)>& f, double lo, double hi, int panels = 400) {
    static const double x[] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    static const double w[] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const double h = (hi - lo) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * h;
        for (int k = 0; k < 4; ++k) {
            sum += w[k] * (f(mid - 0.5 * h * x[k]) + f(mid + 0.5 * h * x[k]));
        }
    }
    return 0.5 * h * sum;
}

// Brute force over prefix sizes: least squares on the k decorrelated
// predictors with the largest |omega|, each prefix refitted by QR, and the
// penalized objective RSS_k + pen * k * RSS_full / n. Ties go to smaller k.
inline std::vector<Index> brute_force_prefix(const carscore::Dataset& data, double pen) {
    const carscore::Standardized s = carscore::standardize(data);
    const Index n = data.rows();
    const Index d = data.cols();
    const Matrix r = s.x.transpose() * s.x / static_cast<double>(n - 1);
    const Matrix root_inv = sqrtm_iterative(r).inverse();
    const Matrix z = s.x * root_inv;
    const Vector omega = z.transpose() * s.y / static_cast<double>(n - 1);
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(omega(a)) > std::abs(omega(b)); });
    auto rss = [&](Index k) {
        if (k == 0) return s.y.squaredNorm();
        Matrix zk(n, k);
        for (Index c = 0; c < k; ++c) zk.col(c) = z.col(order[static_cast<std::size_t>(c)]);
        const Vector coef = zk.colPivHouseholderQr().solve(s.y);
        return (s.y - zk * coef).squaredNorm();
    };
    const double rss_full = rss(d);
    Index best = 0;
    double best_obj = rss(0);
    for (Index k = 1; k <= d; ++k) {
        const double obj = rss(k) + pen * static_cast<double>(k) * rss_full / static_cast<double>(n);
        if (obj < best_obj) {
            best_obj = obj;
            best = k;
        }
    }
    return {order.begin(), order.begin() + best};
}

}  // namespace testing_support
