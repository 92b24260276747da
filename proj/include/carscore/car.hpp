#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/linalg.hpp"

namespace carscore {

/// Importance measures that compete with squared CAR scores.
struct CompetitorMeasures {
    Vector marginal;       // rho = P_XY
    Vector b_std;          // P^-1 P_XY
    Vector t_scores;       // tau
    Vector partial;        // partial correlations
    Vector hoffman_pratt;  // (b_std)_j rho_j
    Vector genizi;         // sum_k ((P^1/2)_jk omega_k)^2
    Index dof = 0;
};

struct CarAnalysis {
    Vector omega;
    Vector importance;           // omega^2
    std::vector<Index> ranking;  // by importance, descending; ties by index
    double r_squared = 0.0;      // sum of omega^2
    Index n = 0;
    double lambda = 0.0;
    EstimatorKind kind = EstimatorKind::Empirical;
    std::optional<CompetitorMeasures> competitors;
};

namespace detail {

inline bool is_exact_identity(const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

}  // namespace detail

/// Variable indices ordered by decreasing score, ties broken by ascending index.
inline std::vector<Index> rank_descending(const Vector& score) {
    std::vector<Index> order(static_cast<std::size_t>(score.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
    return order;
}

/// omega = P^-1/2 P_XY.
inline Vector car_scores(const CorrelationModel& cm) {
    if (detail::is_exact_identity(cm.p().matrix())) return cm.p_xy();
    return cm.apply_power(-0.5, cm.p_xy());
}

/// Mahalanobis-decorrelated, standardized predictors P^-1/2 V^-1/2 (x - mu).
inline Vector decorrelate(const CorrelationModel& cm, const Vector& x_row) {
    require(x_row.size() == cm.dimension(), ErrorCode::DimensionMismatch, "row length does not match model");
    require(x_row.allFinite(), ErrorCode::InvalidParameters, "row has non-finite entries");
    const Vector z = (x_row - cm.moments().means).cwiseQuotient(cm.moments().sds);
    if (detail::is_exact_identity(cm.p().matrix())) return z;
    return cm.apply_power(-0.5, z);
}

/// Standardized prediction omega^T delta.
inline double predict_std(const Vector& omega, const Vector& delta) {
    require(omega.size() == delta.size(), ErrorCode::DimensionMismatch, "omega and delta lengths differ");
    return omega.dot(delta);
}

/// sqrt of the summed squared CAR scores over a set of variables.
inline double grouped_score(const Vector& omega, const std::vector<Index>& group) {
    require(!group.empty(), ErrorCode::EmptyGroup, "group is empty");
    double ss = 0.0;
    for (Index j : group) {
        require(j >= 0 && j < omega.size(), ErrorCode::IndexOutOfRange, "index " + std::to_string(j));
        ss += omega(j) * omega(j);
    }
    return std::sqrt(ss);
}

/// Genizi importance sum_k ((P^1/2)_jk omega_k)^2; needs no residual variance.
inline Vector genizi_weights(const CorrelationModel& cm) {
    const SymMatrix p_half = cm.power(0.5);
    const Vector omega = car_scores(cm);
    const Index d = cm.dimension();
    Vector out = Vector::Zero(d);
    for (Index j = 0; j < d; ++j)
        for (Index k = 0; k < d; ++k) {
            const double term = p_half(j, k) * omega(k);
            out(j) += term * term;
        }
    return out;
}

inline CompetitorMeasures competitor_measures(const CorrelationModel& cm, Index dof) {
    require(dof >= 1, ErrorCode::InvalidParameters, "degrees of freedom must be positive");
    const Vector& rho = cm.p_xy();
    const SymMatrix p_inv = cm.power(-1.0);

    CompetitorMeasures out;
    out.dof = dof;
    out.marginal = rho;
    out.b_std = p_inv.matrix() * rho;
    const double omega2 = rho.dot(out.b_std);
    require(omega2 < 1.0 - 1e-12, ErrorCode::PerfectFit, "squared multiple correlation is 1");
    const double scale = std::sqrt(static_cast<double>(dof) / (1.0 - omega2));
    out.t_scores = out.b_std.cwiseQuotient(p_inv.matrix().diagonal().cwiseSqrt()) * scale;
    out.partial = out.t_scores.array() / (out.t_scores.array().square() + static_cast<double>(dof)).sqrt();
    out.hoffman_pratt = out.b_std.cwiseProduct(rho);
    out.genizi = genizi_weights(cm);
    return out;
}

/// CAR scores with their importance, ranking and sum. Competitor measures are
/// added on request; dof defaults to max(1, n - d - 1).
inline CarAnalysis analyze(const CorrelationModel& cm, bool with_competitors = false,
                           std::optional<Index> dof = std::nullopt) {
    CarAnalysis a;
    a.omega = car_scores(cm);
    a.importance = a.omega.cwiseProduct(a.omega);
    a.ranking = rank_descending(a.importance);
    a.r_squared = a.importance.sum();
    a.n = cm.n();
    a.lambda = cm.lambda();
    a.kind = cm.kind();
    if (with_competitors) a.competitors = competitor_measures(cm, dof.value_or(std::max<Index>(1, cm.default_dof())));
    return a;
}

}  // namespace carscore
