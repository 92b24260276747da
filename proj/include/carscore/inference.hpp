#pragma once

// Null distributions of empirical correlation-type statistics under
// normality. Signed statistics W (CAR scores, marginal and partial
// correlations) have W^2 ~ Beta(1/2, (kappa - 1)/2); accumulated squared CAR
// scores over s variables follow Beta(s/2, (n - s - 1)/2).

#include <cmath>
#include <string>

#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/special.hpp"

namespace carscore {

enum class NullKind { Car, Marginal, Partial, Grouped, MultipleR2 };

inline std::string to_string(NullKind k) {
    switch (k) {
        case NullKind::Car: return "car";
        case NullKind::Marginal: return "marginal";
        case NullKind::Partial: return "partial";
        case NullKind::Grouped: return "grouped";
        case NullKind::MultipleR2: return "multiple_r2";
    }
    return "unknown";
}

struct NullSpec {
    NullKind kind = NullKind::Car;
    double kappa = 0.0;  // signed kinds
    Index set_size = 1;  // grouped and multiple_r2
    Index n = 0;
    bool regularized = false;

    static NullSpec car(Index n) { return {NullKind::Car, static_cast<double>(n - 1), 1, n, false}; }
    static NullSpec marginal(Index n) { return {NullKind::Marginal, static_cast<double>(n - 1), 1, n, false}; }
    static NullSpec partial(Index n, Index d) { return {NullKind::Partial, static_cast<double>(n - d), 1, n, false}; }
    static NullSpec grouped(Index n, Index s) { return {NullKind::Grouped, 0.0, s, n, false}; }
    static NullSpec multiple_r2(Index n, Index d) { return {NullKind::MultipleR2, 0.0, d, n, false}; }

    /// Null for statistics estimated by cm; shrinkage or population models have no such null.
    static NullSpec for_model(NullKind kind, const CorrelationModel& cm, Index set_size = 1) {
        require(cm.kind() == EstimatorKind::Empirical, ErrorCode::NullUnavailable,
                "null distributions hold for empirical estimates only (estimator is " + to_string(cm.kind()) +
                    ")");
        switch (kind) {
            case NullKind::Car: return car(cm.n());
            case NullKind::Marginal: return marginal(cm.n());
            case NullKind::Partial: return partial(cm.n(), cm.dimension());
            case NullKind::Grouped: return grouped(cm.n(), set_size);
            case NullKind::MultipleR2: return multiple_r2(cm.n(), cm.dimension());
        }
        fail(ErrorCode::InvalidParameters, "unknown null kind");
    }

    bool is_signed() const noexcept {
        return kind == NullKind::Car || kind == NullKind::Marginal || kind == NullKind::Partial;
    }

    /// Shape parameters of the Beta law of the squared statistic.
    double shape_a() const { return is_signed() ? 0.5 : 0.5 * static_cast<double>(set_size); }
    double shape_b() const {
        return is_signed() ? 0.5 * (kappa - 1.0) : 0.5 * static_cast<double>(n - set_size - 1);
    }

    void validate() const {
        require(!regularized, ErrorCode::NullUnavailable, "null distributions hold for empirical estimates only");
        if (is_signed()) {
            require(kappa > 1.0, ErrorCode::InvalidParameters,
                    "kappa must exceed 1 (got " + std::to_string(kappa) + ")");
        } else {
            require(set_size >= 1, ErrorCode::InvalidParameters, "set size must be positive");
            require(n > set_size + 1, ErrorCode::InvalidParameters,
                    "need n > s + 1 (n = " + std::to_string(n) + ", s = " + std::to_string(set_size) + ")");
        }
    }
};

namespace detail {

inline void check_support(const NullSpec& spec, double value) {
    if (spec.is_signed())
        require(value >= -1.0 && value <= 1.0, ErrorCode::OutOfSupport, "value outside [-1, 1]");
    else
        require(value >= 0.0 && value <= 1.0, ErrorCode::OutOfSupport, "value outside [0, 1]");
}

}  // namespace detail

inline double null_density(const NullSpec& spec, double value) {
    spec.validate();
    detail::check_support(spec, value);
    const double a = spec.shape_a();
    const double b = spec.shape_b();
    if (!spec.is_signed()) return special::beta_pdf(value, a, b);
    // |w| Beta(w^2; 1/2, b) = (1 - w^2)^(b - 1) / B(1/2, b)
    const double u = 1.0 - value * value;
    if (u == 0.0) return b > 1.0 ? 0.0 : (b == 1.0 ? std::exp(-special::log_beta(a, b)) : INFINITY);
    return std::exp((b - 1.0) * std::log(u) - special::log_beta(a, b));
}

/// P(W <= value).
inline double null_cdf(const NullSpec& spec, double value) {
    spec.validate();
    detail::check_support(spec, value);
    if (!spec.is_signed()) return special::beta_cdf(value, spec.shape_a(), spec.shape_b());
    const double half_mass = 0.5 * special::beta_cdf(value * value, spec.shape_a(), spec.shape_b());
    return value >= 0.0 ? 0.5 + half_mass : 0.5 - half_mass;
}

inline double null_quantile(const NullSpec& spec, double prob) {
    spec.validate();
    require(prob >= 0.0 && prob <= 1.0, ErrorCode::InvalidParameters, "probability outside [0, 1]");
    if (!spec.is_signed()) return special::beta_quantile(prob, spec.shape_a(), spec.shape_b());
    const double mass = std::abs(2.0 * prob - 1.0);
    const double w = std::sqrt(special::beta_quantile(mass, spec.shape_a(), spec.shape_b()));
    return prob >= 0.5 ? w : -w;
}

/// Two-sided P(|W| >= |w|) for signed kinds, upper tail P(R^2 >= v) otherwise.
inline double p_value(const NullSpec& spec, double observed) {
    spec.validate();
    detail::check_support(spec, observed);
    const double v = spec.is_signed() ? observed * observed : observed;
    if (v == 0.0) return 1.0;
    return special::beta_sf(v, spec.shape_a(), spec.shape_b());
}

/// Non-negative statistic value whose p-value equals alpha (|w| for signed kinds).
inline double critical_value(const NullSpec& spec, double alpha) {
    spec.validate();
    require(alpha > 0.0 && alpha <= 1.0, ErrorCode::InvalidAlpha, "alpha outside (0, 1]");
    const double v = special::beta_upper_quantile(alpha, spec.shape_a(), spec.shape_b());
    return spec.is_signed() ? std::sqrt(v) : v;
}

}  // namespace carscore
