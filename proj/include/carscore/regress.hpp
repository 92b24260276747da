#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "carscore/car.hpp"
#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/linalg.hpp"

namespace carscore {

inline constexpr double kRankTolerance = 1e-10;

struct EstimatorInfo {
    EstimatorKind kind = EstimatorKind::Empirical;
    double lambda = 0.0;
};

/// Linear model on the raw scale. Coefficients span all d predictors and are
/// exactly zero outside `selected`.
struct FittedModel {
    double intercept = 0.0;
    Vector coefficients;
    std::vector<Index> selected;
    double r_squared = 0.0;
    double r_squared_adj = 0.0;
    Index dof_residual = 0;
    Index n = 0;
    Moments moments;
    std::vector<std::string> names;
    EstimatorInfo estimator;
    double tss = 0.0;
    double rss = 0.0;
    double ess = 0.0;

    Index dimension() const noexcept { return coefficients.size(); }
};

/// Population truth used to score an estimated model.
struct TrueModel {
    Matrix covariance;
    Vector b;
    double a = 0.0;
    double sigma = 1.0;
};

struct ModelError {
    double me = 0.0;
    double relative = 0.0;
};

namespace detail {

inline void check_selection(const std::vector<Index>& selected, Index d) {
    std::set<Index> seen;
    for (Index j : selected) {
        require(j >= 0 && j < d, ErrorCode::IndexOutOfRange, "variable index " + std::to_string(j));
        require(seen.insert(j).second, ErrorCode::InvalidParameters, "variable " + std::to_string(j) + " repeated");
    }
}

// Sums of squares and R^2 figures from in-sample fitted values.
inline void fill_fit_statistics(FittedModel& m, const Dataset& data) {
    const Vector fitted = (data.x * m.coefficients).array() + m.intercept;
    const double ybar = data.y.mean();
    m.tss = (data.y.array() - ybar).square().sum();
    m.rss = (data.y - fitted).squaredNorm();
    m.ess = (fitted.array() - ybar).square().sum();
    require(m.tss > 0.0, ErrorCode::DegenerateData, "response has zero variance");
    const auto n = static_cast<double>(data.rows());
    const auto k = static_cast<double>(m.selected.size());
    m.n = data.rows();
    m.dof_residual = data.rows() - static_cast<Index>(m.selected.size()) - 1;
    m.r_squared = std::clamp(1.0 - m.rss / m.tss, 0.0, 1.0);
    m.r_squared_adj = m.dof_residual > 0 ? 1.0 - (m.rss / (n - k - 1.0)) / (m.tss / (n - 1.0)) : m.r_squared;
}

inline FittedModel intercept_only(const Dataset& data) {
    FittedModel m;
    m.coefficients = Vector::Zero(data.cols());
    m.intercept = data.y.mean();
    m.names = data.names;
    m.moments = standardize(data).moments;
    fill_fit_statistics(m, data);
    return m;
}

}  // namespace detail

/// Least squares on the selected columns (with intercept), solved by a
/// column-pivoted QR of the centered, column-scaled design.
inline FittedModel fit_ols(const Dataset& data, const std::vector<Index>& selected) {
    data.validate();
    detail::check_selection(selected, data.cols());
    const Index n = data.rows();
    const auto k = static_cast<Index>(selected.size());
    require(k <= n - 2, ErrorCode::TooManyVariables,
            std::to_string(k) + " variables for " + std::to_string(n) + " observations");
    if (k == 0) return detail::intercept_only(data);

    const Dataset sub = data.subset_cols(selected);
    const Vector xbar = sub.x.colwise().mean();
    const double ybar = data.y.mean();
    Matrix design = sub.x.rowwise() - xbar.transpose();
    const Vector norms = design.colwise().norm();
    for (Index j = 0; j < k; ++j)
        require(norms(j) > 0.0, ErrorCode::RankDeficient, "column '" + sub.names[j] + "' is constant");
    design = design * norms.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(kRankTolerance);
    require(qr.rank() == k, ErrorCode::RankDeficient,
            "selected columns have rank " + std::to_string(qr.rank()) + " < " + std::to_string(k));
    const Vector scaled = qr.solve((data.y.array() - ybar).matrix());
    const Vector coef = scaled.cwiseQuotient(norms);

    FittedModel m;
    m.coefficients = Vector::Zero(data.cols());
    for (Index a = 0; a < k; ++a) m.coefficients(selected[a]) = coef(a);
    m.intercept = ybar - coef.dot(xbar);
    m.selected = selected;
    m.names = data.names;
    m.moments = standardize(data).moments;
    detail::fill_fit_statistics(m, data);
    return m;
}

/// Regression from a shrinkage estimate of the joint correlation matrix of
/// (X_S, Y) toward the identity: with R the empirical correlation of the
/// selected predictors, r their correlations with Y and lambda the intensity
/// of the joint (k+1)-variate matrix,
///   b_std = ((1 - lambda) R + lambda I)^-1 (1 - lambda) r.
/// lambda is re-estimated on the selected columns unless supplied; lambda = 0
/// is ordinary least squares.
inline FittedModel fit_shrinkage(const Dataset& data, const std::vector<Index>& selected,
                                 std::optional<double> lambda = std::nullopt) {
    data.validate();
    detail::check_selection(selected, data.cols());
    if (lambda)
        require(*lambda >= 0.0 && *lambda <= 1.0, ErrorCode::LambdaOutOfRange,
                "lambda " + std::to_string(*lambda) + " outside [0, 1]");
    const auto k = static_cast<Index>(selected.size());
    if (k == 0) return detail::intercept_only(data);

    const Dataset sub = data.subset_cols(selected);
    const Standardized s = standardize(sub);
    Matrix joint(s.x.rows(), k + 1);
    joint << s.x, s.y;
    const double lam = lambda ? *lambda : shrinkage_intensity(joint);
    if (lam == 0.0) return fit_ols(data, selected);

    Matrix r = ::carscore::detail::correlation_from_standardized(s.x) * (1.0 - lam);
    r.diagonal().setOnes();
    const Vector rxy = ::carscore::detail::cross_correlation(s.x, s.y) * (1.0 - lam);
    Eigen::LLT<Matrix> llt(r);
    require(llt.info() == Eigen::Success, ErrorCode::NotPositiveDefinite, "shrunk correlation is not PD");
    const Vector b_std = llt.solve(rxy);
    const Vector coef = b_std.cwiseProduct(s.moments.sds.cwiseInverse()) * s.moments.y_sd;

    FittedModel m;
    m.coefficients = Vector::Zero(data.cols());
    for (Index a = 0; a < k; ++a) m.coefficients(selected[a]) = coef(a);
    m.intercept = s.moments.y_mean - coef.dot(s.moments.means);
    m.selected = selected;
    m.names = data.names;
    m.moments = standardize(data).moments;
    m.estimator = {EstimatorKind::Shrinkage, lam};
    detail::fill_fit_statistics(m, data);
    return m;
}

/// Fit on a subset with the fitting rule that matches the estimator:
/// least squares for empirical estimates, joint shrinkage otherwise.
inline FittedModel fit_subset(const Dataset& data, const std::vector<Index>& selected,
                              const EstimatorChoice& choice) {
    if (!choice.is_shrinkage()) return fit_ols(data, selected);
    return fit_shrinkage(data, selected, choice.fixed_lambda());
}

/// Raw-scale (a, b) from CAR scores: b = sigma_Y V^-1/2 P^-1/2 omega and
/// a = mu_Y - b^T mu.
inline std::pair<double, Vector> coefficients_from_car(const CorrelationModel& cm, const Vector& omega) {
    require(omega.size() == cm.dimension(), ErrorCode::DimensionMismatch, "omega length does not match model");
    const Vector b_std = detail::is_exact_identity(cm.p().matrix()) ? omega : cm.apply_power(-0.5, omega);
    const Vector b = b_std.cwiseQuotient(cm.moments().sds) * cm.moments().y_sd;
    return {cm.moments().y_mean - b.dot(cm.moments().means), b};
}

inline Vector predict(const FittedModel& model, const Matrix& x_new) {
    require(x_new.cols() == model.dimension(), ErrorCode::DimensionMismatch,
            "data has " + std::to_string(x_new.cols()) + " columns, model has " +
                std::to_string(model.dimension()));
    return (x_new * model.coefficients).array() + model.intercept;
}

/// Maps a model fitted to standardized data (described by `moments`) back to
/// the raw scale.
inline FittedModel to_raw_scale(const FittedModel& standardized_fit, const Moments& moments) {
    require(moments.means.size() == standardized_fit.dimension(), ErrorCode::DimensionMismatch,
            "moments do not match model");
    FittedModel m = standardized_fit;
    m.coefficients = standardized_fit.coefficients.cwiseQuotient(moments.sds) * moments.y_sd;
    m.intercept = moments.y_mean + moments.y_sd * standardized_fit.intercept - m.coefficients.dot(moments.means);
    m.moments = moments;
    const double s2 = moments.y_sd * moments.y_sd;
    m.tss *= s2;
    m.rss *= s2;
    m.ess *= s2;
    return m;
}

/// (db)^T Sigma db + (da)^2, and its ratio to the irreducible error sigma^2.
inline ModelError model_error(const Vector& b_hat, double a_hat, const TrueModel& truth) {
    require(b_hat.size() == truth.b.size() && truth.covariance.rows() == truth.b.size() &&
                truth.covariance.cols() == truth.b.size(),
            ErrorCode::DimensionMismatch, "estimate and truth disagree on dimension");
    require(truth.sigma > 0.0, ErrorCode::InvalidParameters, "truth needs positive noise SD");
    const Vector db = b_hat - truth.b;
    const double da = a_hat - truth.a;
    const double me = std::max(0.0, db.dot(truth.covariance * db)) + da * da;
    return {me, me / (truth.sigma * truth.sigma)};
}

}  // namespace carscore
