#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "carscore/error.hpp"
#include "carscore/linalg.hpp"

namespace carscore {

/// n x d predictors, a length-n response and one label per predictor column.
struct Dataset {
    Matrix x;
    Vector y;
    std::vector<std::string> names;

    Index rows() const noexcept { return x.rows(); }
    Index cols() const noexcept { return x.cols(); }

    void validate() const {
        require(x.rows() >= 3, ErrorCode::DegenerateData, "need at least 3 observations");
        require(x.cols() >= 1, ErrorCode::DegenerateData, "need at least one predictor");
        require(y.size() == x.rows(), ErrorCode::DimensionMismatch,
                "response has " + std::to_string(y.size()) + " values for " + std::to_string(x.rows()) + " rows");
        require(static_cast<Index>(names.size()) == x.cols(), ErrorCode::DimensionMismatch,
                "got " + std::to_string(names.size()) + " names for " + std::to_string(x.cols()) + " columns");
        require(x.allFinite() && y.allFinite(), ErrorCode::DegenerateData, "missing or non-finite values");
    }

    template <typename Rows>
    Dataset subset_rows(const Rows& rows) const {
        Dataset out{Matrix(static_cast<Index>(rows.size()), cols()), Vector(static_cast<Index>(rows.size())), names};
        for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
            out.x.row(i) = x.row(static_cast<Index>(rows[i]));
            out.y(i) = y(static_cast<Index>(rows[i]));
        }
        return out;
    }

    template <typename Cols>
    Dataset subset_cols(const Cols& cols_idx) const {
        Dataset out{Matrix(rows(), static_cast<Index>(cols_idx.size())), y, {}};
        for (Index j = 0; j < static_cast<Index>(cols_idx.size()); ++j) {
            out.x.col(j) = x.col(static_cast<Index>(cols_idx[j]));
            out.names.push_back(names[cols_idx[j]]);
        }
        return out;
    }
};

inline std::vector<std::string> default_names(Index d) {
    std::vector<std::string> names;
    for (Index j = 0; j < d; ++j) names.push_back("X" + std::to_string(j + 1));
    return names;
}

inline Dataset make_dataset(Matrix x, Vector y, std::vector<std::string> names = {}) {
    if (names.empty()) names = default_names(x.cols());
    Dataset d{std::move(x), std::move(y), std::move(names)};
    d.validate();
    return d;
}

/// Location and scale of every column, for back-transformation.
struct Moments {
    Vector means;
    Vector sds;
    double y_mean = 0.0;
    double y_sd = 1.0;
};

struct Standardized {
    Matrix x;
    Vector y;
    Moments moments;
};

namespace detail {

inline double sample_sd(const Eigen::Ref<const Vector>& v, double mean) {
    const double ss = (v.array() - mean).square().sum();
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Centers every column and scales it to unit sample SD (denominator n - 1).
inline Standardized standardize(const Dataset& data) {
    data.validate();
    const Index n = data.rows();
    const Index d = data.cols();
    Standardized out{Matrix(n, d), Vector(n), {Vector(d), Vector(d), 0.0, 1.0}};
    for (Index j = 0; j < d; ++j) {
        const double mean = data.x.col(j).mean();
        const double sd = detail::sample_sd(data.x.col(j), mean);
        require(sd > 0.0, ErrorCode::DegenerateData, "column '" + data.names[j] + "' has zero variance");
        out.moments.means(j) = mean;
        out.moments.sds(j) = sd;
        out.x.col(j) = (data.x.col(j).array() - mean) / sd;
    }
    out.moments.y_mean = data.y.mean();
    out.moments.y_sd = detail::sample_sd(data.y, out.moments.y_mean);
    require(out.moments.y_sd > 0.0, ErrorCode::DegenerateData, "response has zero variance");
    out.y = (data.y.array() - out.moments.y_mean) / out.moments.y_sd;
    return out;
}

enum class EstimatorKind { Empirical, Shrinkage, Population };

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Empirical: return "empirical";
        case EstimatorKind::Shrinkage: return "shrinkage";
        case EstimatorKind::Population: return "population";
    }
    return "unknown";
}

/// Correlation structure of (X, Y) together with the moments needed to map
/// back to the raw scale. Immutable; copies share a lazily built spectrum.
class CorrelationModel {
public:
    CorrelationModel(SymMatrix p, Vector p_xy, Moments moments, double lambda, Index n, EstimatorKind kind,
                     std::shared_ptr<const ShrinkagePowerOperator> fast = nullptr)
        : p_(std::move(p)),
          p_xy_(std::move(p_xy)),
          moments_(std::move(moments)),
          lambda_(lambda),
          n_(n),
          kind_(kind),
          fast_(std::move(fast)),
          cache_(std::make_shared<Cache>()) {
        const Index d = p_.order();
        require(p_xy_.size() == d && moments_.means.size() == d && moments_.sds.size() == d,
                ErrorCode::DimensionMismatch, "correlation model parts disagree on dimension");
        require(p_.is_correlation(1e-10), ErrorCode::InvalidParameters, "P is not a correlation matrix");
        require((p_xy_.array().abs() <= 1.0 + 1e-10).all(), ErrorCode::InvalidParameters, "|P_XY| exceeds 1");
        require((moments_.sds.array() > 0.0).all() && moments_.y_sd > 0.0, ErrorCode::InvalidParameters,
                "standard deviations must be positive");
        require(lambda_ >= 0.0 && lambda_ <= 1.0, ErrorCode::LambdaOutOfRange, "lambda outside [0, 1]");
        require((kind_ == EstimatorKind::Shrinkage) == (lambda_ > 0.0), ErrorCode::InvalidParameters,
                "lambda must be positive exactly for shrinkage estimates");
    }

    const SymMatrix& p() const noexcept { return p_; }
    const Vector& p_xy() const noexcept { return p_xy_; }
    const Moments& moments() const noexcept { return moments_; }
    double lambda() const noexcept { return lambda_; }
    Index n() const noexcept { return n_; }
    Index dimension() const noexcept { return p_.order(); }
    EstimatorKind kind() const noexcept { return kind_; }
    bool uses_fast_path() const noexcept { return fast_ != nullptr; }

    /// Degrees of freedom of the full regression, n - d - 1.
    Index default_dof() const noexcept { return n_ - dimension() - 1; }

    const SpectralDecomposition& spectrum() const {
        std::call_once(cache_->once, [this] { cache_->spectrum = spectral_decomposition(p_); });
        return cache_->spectrum;
    }

    /// P^power v, through the low-rank shrinkage route when one is attached.
    Vector apply_power(double power, const Vector& v) const {
        if (fast_) return fast_->apply(v, power);
        return carscore::apply_power(spectrum(), power, v);
    }

    SymMatrix power(double p) const { return sym_power(spectrum(), p); }

    /// Model for a subset of predictors, keeping P, P_XY and moments as estimated.
    template <typename Indices>
    CorrelationModel restrict(const Indices& idx) const {
        const auto k = static_cast<Index>(idx.size());
        require(k > 0, ErrorCode::EmptyGroup, "cannot restrict to an empty set");
        Vector pxy(k);
        Moments m{Vector(k), Vector(k), moments_.y_mean, moments_.y_sd};
        for (Index a = 0; a < k; ++a) {
            const auto j = static_cast<Index>(idx[a]);
            require(j >= 0 && j < dimension(), ErrorCode::IndexOutOfRange, "variable index out of range");
            pxy(a) = p_xy_(j);
            m.means(a) = moments_.means(j);
            m.sds(a) = moments_.sds(j);
        }
        return CorrelationModel(p_.principal(idx), pxy, m, lambda_, n_, kind_);
    }

private:
    struct Cache {
        std::once_flag once;
        SpectralDecomposition spectrum;
    };

    SymMatrix p_;
    Vector p_xy_;
    Moments moments_;
    double lambda_;
    Index n_;
    EstimatorKind kind_;
    std::shared_ptr<const ShrinkagePowerOperator> fast_;
    std::shared_ptr<Cache> cache_;
};

namespace detail {

inline Matrix correlation_from_standardized(const Matrix& xs) {
    const double denom = static_cast<double>(xs.rows() - 1);
    Matrix r = (xs.transpose() * xs) / denom;
    r = (r + r.transpose()) * 0.5;
    r = r.cwiseMax(-1.0).cwiseMin(1.0);
    r.diagonal().setOnes();
    return r;
}

inline Vector cross_correlation(const Matrix& xs, const Vector& ys) {
    const double denom = static_cast<double>(xs.rows() - 1);
    return ((xs.transpose() * ys) / denom).cwiseMax(-1.0).cwiseMin(1.0);
}

}  // namespace detail

/// Data-driven shrinkage intensity toward the identity correlation matrix:
/// sum of estimated variances of the off-diagonal correlations divided by the
/// sum of their squares, clamped to [0, 1]. Input must be column-standardized.
inline double shrinkage_intensity(const Matrix& xs) {
    const Index n = xs.rows();
    const Index d = xs.cols();
    require(n >= 3, ErrorCode::DegenerateData, "need at least 3 observations");
    const double nd = static_cast<double>(n);
    const Matrix w = xs.cwiseProduct(xs);
    const Matrix s1 = xs.transpose() * xs;
    const Matrix s2 = w.transpose() * w;
    double num = 0.0;
    double den = 0.0;
    for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < d; ++j) {
            if (i == j) continue;
            const double r = s1(i, j) / (nd - 1.0);
            const double ss = std::max(0.0, s2(i, j) - s1(i, j) * s1(i, j) / nd);
            num += nd / ((nd - 1.0) * (nd - 1.0) * (nd - 1.0)) * ss;
            den += r * r;
        }
    }
    if (den == 0.0) return num > 0.0 ? 1.0 : 0.0;
    return std::clamp(num / den, 0.0, 1.0);
}

inline CorrelationModel estimate_empirical(const Dataset& data) {
    const Standardized s = standardize(data);
    return CorrelationModel(SymMatrix(detail::correlation_from_standardized(s.x)),
                            detail::cross_correlation(s.x, s.y), s.moments, 0.0, data.rows(),
                            EstimatorKind::Empirical);
}

/// lambda I + (1 - lambda) R_emp with the marginal correlations left as
/// estimated. lambda is estimated when not supplied; an intensity of zero
/// yields the empirical model.
inline CorrelationModel estimate_shrinkage(const Dataset& data, std::optional<double> lambda = std::nullopt) {
    if (lambda)
        require(*lambda >= 0.0 && *lambda <= 1.0, ErrorCode::LambdaOutOfRange,
                "lambda " + std::to_string(*lambda) + " outside [0, 1]");
    const Standardized s = standardize(data);
    const double lam = lambda ? *lambda : shrinkage_intensity(s.x);
    Matrix r = detail::correlation_from_standardized(s.x);
    if (lam > 0.0) {
        r *= (1.0 - lam);
        r.diagonal().setOnes();
    }
    std::shared_ptr<const ShrinkagePowerOperator> fast;
    if (lam > 0.0 && data.cols() > data.rows()) fast = std::make_shared<ShrinkagePowerOperator>(s.x, lam);
    return CorrelationModel(SymMatrix(r), detail::cross_correlation(s.x, s.y), s.moments, lam, data.rows(),
                            lam > 0.0 ? EstimatorKind::Shrinkage : EstimatorKind::Empirical, std::move(fast));
}

/// Population model for predictors with correlation P and standard deviations
/// sds, response Y = a + b^T X + eps with var(eps) = sigma^2.
inline CorrelationModel population_model(const SymMatrix& p, const Vector& b, double sigma,
                                         std::optional<Vector> sds = std::nullopt,
                                         std::optional<Vector> means = std::nullopt, double intercept = 0.0) {
    const Index d = p.order();
    require(b.size() == d, ErrorCode::DimensionMismatch, "coefficient length does not match P");
    require(sigma >= 0.0, ErrorCode::InvalidParameters, "sigma must be non-negative");
    const Vector sd = sds.value_or(Vector::Ones(d));
    const Vector mu = means.value_or(Vector::Zero(d));
    require(sd.size() == d && mu.size() == d, ErrorCode::DimensionMismatch, "moment length does not match P");
    const Vector scaled_b = sd.cwiseProduct(b);
    const double signal = scaled_b.dot(p.matrix() * scaled_b);
    const double y_sd = std::sqrt(signal + sigma * sigma);
    require(y_sd > 0.0, ErrorCode::InvalidParameters, "response has zero variance");
    Moments m{mu, sd, intercept + b.dot(mu), y_sd};
    Vector pxy = p.matrix() * scaled_b / y_sd;
    return CorrelationModel(p, pxy, m, 0.0, 0, EstimatorKind::Population);
}

/// How a correlation model is estimated from data.
struct EstimatorChoice {
    enum class Mode { Empirical, ShrinkageAuto, ShrinkageFixed };
    Mode mode = Mode::Empirical;
    double lambda = 0.0;  // ShrinkageFixed only

    static EstimatorChoice empirical() { return {Mode::Empirical, 0.0}; }
    static EstimatorChoice shrinkage() { return {Mode::ShrinkageAuto, 0.0}; }
    static EstimatorChoice shrinkage(double lambda) { return {Mode::ShrinkageFixed, lambda}; }

    bool is_shrinkage() const noexcept { return mode != Mode::Empirical; }
    std::optional<double> fixed_lambda() const {
        return mode == Mode::ShrinkageFixed ? std::optional<double>(lambda) : std::nullopt;
    }

    std::string describe() const {
        switch (mode) {
            case Mode::Empirical: return "empirical";
            case Mode::ShrinkageAuto: return "shrinkage";
            case Mode::ShrinkageFixed: return "shrinkage:" + std::to_string(lambda);
        }
        return "unknown";
    }
};

inline CorrelationModel estimate(const Dataset& data, const EstimatorChoice& choice) {
    if (choice.mode == EstimatorChoice::Mode::Empirical) return estimate_empirical(data);
    return estimate_shrinkage(data, choice.fixed_lambda());
}

}  // namespace carscore
