#pragma once

// Synthetic regression scenarios and replicated train/validation experiments
// scored by relative model error and true/false positive counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "carscore/car.hpp"
#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/linalg.hpp"
#include "carscore/parallel.hpp"
#include "carscore/regress.hpp"
#include "carscore/rng.hpp"

namespace carscore {

enum class ScenarioId { Ex1, Ex2, Ex3, Ex4, Custom };
enum class CorrelationPattern { Autoregressive, Block, Explicit };

class Scenario {
public:
    Scenario(ScenarioId id, std::string name, Vector b, SymMatrix correlation, CorrelationPattern pattern,
             double sigma, double intercept, EstimatorChoice default_estimator)
        : id_(id),
          name_(std::move(name)),
          b_(std::move(b)),
          correlation_(std::move(correlation)),
          pattern_(pattern),
          sigma_(sigma),
          intercept_(intercept),
          default_estimator_(default_estimator) {
        require(b_.size() == correlation_.order(), ErrorCode::DimensionMismatch, "b does not match correlation");
        require(sigma_ > 0.0, ErrorCode::InvalidConfig, "sigma must be positive");
        require(correlation_.is_correlation(1e-12), ErrorCode::InvalidConfig, "not a correlation matrix");
        const SpectralDecomposition spectrum = spectral_decomposition(correlation_);
        require(spectrum.smallest() > kEigenTolerance, ErrorCode::NotPositiveDefinite,
                "scenario correlation is not positive definite");
        root_ = sym_power(spectrum, 0.5).matrix();
    }

    static Matrix autoregressive(Index d, double rho) {
        Matrix p(d, d);
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j) p(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
        return p;
    }

    /// Identity with constant correlation rho inside each [begin, end) block.
    static Matrix blocks(Index d, const std::vector<std::pair<Index, Index>>& ranges, double rho) {
        Matrix p = Matrix::Identity(d, d);
        for (const auto& [lo, hi] : ranges)
            for (Index i = lo; i < hi; ++i)
                for (Index j = lo; j < hi; ++j)
                    if (i != j) p(i, j) = rho;
        return p;
    }

    static Vector example_b8() {
        Vector b(8);
        b << 3, 1.5, 0, 0, 2, 0, 0, 0;
        return b;
    }

    static Scenario ex1(double sigma = 1.0) {
        return {ScenarioId::Ex1, "ex1", example_b8(), SymMatrix(autoregressive(8, 0.5)),
                CorrelationPattern::Autoregressive, sigma, 0.0, EstimatorChoice::empirical()};
    }

    static Scenario ex2(double sigma = 1.0) {
        return {ScenarioId::Ex2, "ex2", example_b8(), SymMatrix(autoregressive(8, 0.85)),
                CorrelationPattern::Autoregressive, sigma, 0.0, EstimatorChoice::empirical()};
    }

    static Scenario ex3(double sigma = 3.0) {
        Vector b = Vector::Zero(40);
        b.head(5).setConstant(3.0);
        b.segment(5, 5).setConstant(-2.0);
        return {ScenarioId::Ex3, "ex3", b, SymMatrix(blocks(40, {{0, 10}}, 0.9)), CorrelationPattern::Block,
                sigma, 0.0, EstimatorChoice::shrinkage()};
    }

    static Scenario ex4(double sigma = 6.0) {
        Vector b = Vector::Zero(40);
        b.head(6) << 3, 3, -2, 3, 3, -2;
        return {ScenarioId::Ex4, "ex4", b, SymMatrix(blocks(40, {{0, 3}, {3, 6}}, 0.9)), CorrelationPattern::Block,
                sigma, 0.0, EstimatorChoice::shrinkage()};
    }

    static Scenario custom(const SymMatrix& correlation, const Vector& b, double sigma, double intercept = 0.0,
                           EstimatorChoice estimator = EstimatorChoice::empirical()) {
        return {ScenarioId::Custom, "custom", b, correlation, CorrelationPattern::Explicit, sigma, intercept,
                estimator};
    }

    static Scenario by_name(const std::string& name) {
        if (name == "ex1") return ex1();
        if (name == "ex2") return ex2();
        if (name == "ex3") return ex3();
        if (name == "ex4") return ex4();
        fail(ErrorCode::InvalidConfig, "unknown scenario '" + name + "'");
    }

    ScenarioId id() const noexcept { return id_; }
    const std::string& name() const noexcept { return name_; }
    const Vector& b() const noexcept { return b_; }
    const SymMatrix& correlation() const noexcept { return correlation_; }
    CorrelationPattern pattern() const noexcept { return pattern_; }
    double sigma() const noexcept { return sigma_; }
    double intercept() const noexcept { return intercept_; }
    Index d() const noexcept { return b_.size(); }
    const EstimatorChoice& default_estimator() const noexcept { return default_estimator_; }
    const Matrix& correlation_root() const noexcept { return root_; }

    Scenario with_sigma(double sigma) const {
        Scenario s = *this;
        require(sigma > 0.0, ErrorCode::InvalidConfig, "sigma must be positive");
        s.sigma_ = sigma;
        return s;
    }

    /// Predictors have unit variance, so the covariance is the correlation matrix.
    TrueModel truth() const { return {correlation_.matrix(), b_, intercept_, sigma_}; }

    Index true_nonzero() const { return (b_.array() != 0.0).count(); }

private:
    ScenarioId id_;
    std::string name_;
    Vector b_;
    SymMatrix correlation_;
    CorrelationPattern pattern_;
    double sigma_;
    double intercept_;
    EstimatorChoice default_estimator_;
    Matrix root_;
};

/// n rows with x ~ N(0, P) drawn as P^{1/2} z, and y = a + b^T x + sigma eps.
/// Per row the stream yields d predictor normals followed by the noise draw.
inline Dataset sample(const Scenario& scenario, Index n, RandomStream& rng) {
    require(n >= 1, ErrorCode::InvalidConfig, "n must be positive");
    const Index d = scenario.d();
    Matrix z(n, d);
    Vector eps(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) z(i, j) = rng.normal();
        eps(i) = rng.normal();
    }
    Dataset out;
    out.x = z * scenario.correlation_root();
    out.y = ((out.x * scenario.b()).array() + scenario.intercept()).matrix() + scenario.sigma() * eps;
    out.names = default_names(d);
    return out;
}

enum class Method { CarEmpirical, CarShrinkage, OlsFull, PcorRanked, GeniziRanked, MarginalRanked };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::CarEmpirical: return "car_empirical";
        case Method::CarShrinkage: return "car_shrinkage";
        case Method::OlsFull: return "ols_full";
        case Method::PcorRanked: return "pcor_ranked";
        case Method::GeniziRanked: return "genizi_ranked";
        case Method::MarginalRanked: return "marginal_ranked";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& s) {
    for (Method m : {Method::CarEmpirical, Method::CarShrinkage, Method::OlsFull, Method::PcorRanked,
                     Method::GeniziRanked, Method::MarginalRanked})
        if (to_string(m) == s) return m;
    fail(ErrorCode::InvalidConfig, "unknown method '" + s + "'");
}

struct ReplicateRecord {
    double relative_me = 0.0;
    Index true_positives = 0;
    Index false_positives = 0;
    Index model_size = 0;
};

struct Aggregates {
    double mean_rme = 0.0;
    double sd_of_mean = 0.0;
    double mean_tp = 0.0;
    double mean_fp = 0.0;
    double mean_size = 0.0;
    double median_size = 0.0;
};

struct ExperimentConfig {
    std::string scenario;
    Index n = 0;
    double sigma = 0.0;
    Method method = Method::CarEmpirical;
    Index reps = 0;
    std::uint64_t seed = 0;
    EstimatorChoice estimator;
};

struct SimulationReport {
    ExperimentConfig config;
    std::vector<ReplicateRecord> records;
    Aggregates aggregates;
};

/// Means and spreads over replicate records, in record order.
inline Aggregates aggregate_records(const std::vector<ReplicateRecord>& records) {
    require(!records.empty(), ErrorCode::EmptyInput, "no replicate records");
    const auto m = static_cast<double>(records.size());
    Aggregates a;
    for (const auto& r : records) {
        a.mean_rme += r.relative_me;
        a.mean_tp += static_cast<double>(r.true_positives);
        a.mean_fp += static_cast<double>(r.false_positives);
        a.mean_size += static_cast<double>(r.model_size);
    }
    a.mean_rme /= m;
    a.mean_tp /= m;
    a.mean_fp /= m;
    a.mean_size /= m;
    if (records.size() > 1) {
        double ss = 0.0;
        for (const auto& r : records) ss += (r.relative_me - a.mean_rme) * (r.relative_me - a.mean_rme);
        a.sd_of_mean = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
    }
    std::vector<Index> sizes;
    for (const auto& r : records) sizes.push_back(r.model_size);
    std::sort(sizes.begin(), sizes.end());
    const std::size_t mid = sizes.size() / 2;
    a.median_size = sizes.size() % 2 ? static_cast<double>(sizes[mid])
                                     : 0.5 * static_cast<double>(sizes[mid - 1] + sizes[mid]);
    return a;
}

namespace detail {

inline std::vector<Index> ranking_for(Method method, const CorrelationModel& cm) {
    switch (method) {
        case Method::CarEmpirical:
        case Method::CarShrinkage: return analyze(cm).ranking;
        case Method::MarginalRanked: return rank_descending(cm.p_xy().cwiseAbs());
        case Method::PcorRanked:
            return rank_descending(competitor_measures(cm, std::max<Index>(1, cm.default_dof())).partial.cwiseAbs());
        case Method::GeniziRanked:
            return rank_descending(genizi_weights(cm));
        case Method::OlsFull: break;
    }
    fail(ErrorCode::MethodUnavailable, "method has no ranking");
}

inline ReplicateRecord score_fit(const FittedModel& m, const Scenario& s) {
    ReplicateRecord r;
    r.relative_me = model_error(m.coefficients, m.intercept, s.truth()).relative;
    for (Index j = 0; j < s.d(); ++j) {
        if (m.coefficients(j) == 0.0) continue;
        ++r.model_size;
        if (s.b()(j) != 0.0)
            ++r.true_positives;
        else
            ++r.false_positives;
    }
    return r;
}

}  // namespace detail

/// Estimator each method uses to build its ranking and refits.
inline EstimatorChoice method_estimator(Method method, const Scenario& scenario,
                                        std::optional<EstimatorChoice> ranking_override) {
    switch (method) {
        case Method::CarEmpirical:
        case Method::OlsFull: return EstimatorChoice::empirical();
        case Method::CarShrinkage: return ranking_override.value_or(EstimatorChoice::shrinkage());
        default: return ranking_override.value_or(scenario.default_estimator());
    }
}

/// One replicate: draw training and validation sets, fit, score. For ranking
/// methods the model size k in 0..min(d, n-2) minimizes validation error
/// (ties to the smaller k). CAR methods refit the top-k subset with their own
/// estimator; PCOR, Genizi and marginal rankings feed ordinary least squares.
inline ReplicateRecord run_replicate(const Scenario& scenario, Index n, Method method,
                                     const EstimatorChoice& estimator, std::uint64_t seed, Index replicate) {
    RandomStream train_rng(seed, static_cast<std::uint64_t>(replicate), 0);
    RandomStream valid_rng(seed, static_cast<std::uint64_t>(replicate), 1);
    const Dataset train = sample(scenario, n, train_rng);
    const Dataset valid = sample(scenario, n, valid_rng);
    const Index d = scenario.d();

    if (method == Method::OlsFull) {
        std::vector<Index> all(static_cast<std::size_t>(d));
        std::iota(all.begin(), all.end(), Index{0});
        return detail::score_fit(fit_ols(train, all), scenario);
    }

    const CorrelationModel cm = estimate(train, estimator);
    const std::vector<Index> ranking = detail::ranking_for(method, cm);
    const bool car_refit = method == Method::CarEmpirical || method == Method::CarShrinkage;
    const EstimatorChoice refit = car_refit ? estimator : EstimatorChoice::empirical();

    std::optional<FittedModel> best;
    double best_err = 0.0;
    const Index k_max = std::min(d, n - 2);
    for (Index k = 0; k <= k_max; ++k) {
        const std::vector<Index> sel(ranking.begin(), ranking.begin() + k);
        FittedModel m = fit_subset(train, sel, refit);
        const double err = (valid.y - predict(m, valid.x)).squaredNorm() / static_cast<double>(n);
        if (!best || err < best_err) {
            best_err = err;
            best = std::move(m);
        }
    }
    return detail::score_fit(*best, scenario);
}

/// Replicates run in parallel; replicate r draws from streams (seed, r, 0)
/// and (seed, r, 1), so the report does not depend on the thread count.
inline SimulationReport run_experiment(const Scenario& scenario, Index n, double sigma, Method method, Index reps,
                                       std::uint64_t seed,
                                       std::optional<EstimatorChoice> ranking_override = std::nullopt) {
    require(reps >= 1, ErrorCode::InvalidConfig, "reps must be positive");
    require(n >= 3, ErrorCode::InvalidConfig, "n must be at least 3");
    const Scenario s = scenario.with_sigma(sigma);
    const EstimatorChoice est = method_estimator(method, s, ranking_override);
    const Index d = s.d();
    if (method == Method::OlsFull)
        require(d <= n - 2, ErrorCode::MethodUnavailable, "ols_full needs d <= n - 2");
    if ((method == Method::CarEmpirical || method == Method::PcorRanked || method == Method::GeniziRanked) &&
        !est.is_shrinkage())
        require(d < n - 1, ErrorCode::MethodUnavailable,
                to_string(method) + " with empirical estimates needs d < n - 1");

    SimulationReport report;
    report.config = {s.name(), n, sigma, method, reps, seed, est};
    report.records.resize(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
        report.records[r] = run_replicate(s, n, method, est, seed, static_cast<Index>(r));
    });
    report.aggregates = aggregate_records(report.records);
    return report;
}

struct TableRow {
    std::string scenario;
    Index n = 0;
    double sigma = 0.0;
    std::string method;
    std::string estimator;
    Index reps = 0;
    std::uint64_t seed = 0;
    double rme_x1000 = 0.0;
    double sd_x1000 = 0.0;
    std::string tp_fp;
    double mean_tp = 0.0;
    double mean_fp = 0.0;
    double median_size = 0.0;
};

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

/// One row per report, in input order.
inline std::vector<TableRow> aggregate(const std::vector<SimulationReport>& reports) {
    require(!reports.empty(), ErrorCode::EmptyInput, "no reports");
    std::vector<TableRow> rows;
    for (const auto& r : reports) {
        const Aggregates& a = r.aggregates;
        rows.push_back({r.config.scenario, r.config.n, r.config.sigma, to_string(r.config.method),
                        r.config.estimator.describe(), r.config.reps, r.config.seed, 1000.0 * a.mean_rme,
                        1000.0 * a.sd_of_mean, format_fixed(a.mean_tp, 1) + "+" + format_fixed(a.mean_fp, 1),
                        a.mean_tp, a.mean_fp, a.median_size});
    }
    return rows;
}

}  // namespace carscore
