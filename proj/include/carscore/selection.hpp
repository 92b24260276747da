#pragma once

// Variable selection by cutting the CAR ranking. Every criterion returns a
// prefix of the ranking by decreasing squared CAR score.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "carscore/car.hpp"
#include "carscore/error.hpp"
#include "carscore/estimation.hpp"
#include "carscore/inference.hpp"
#include "carscore/parallel.hpp"
#include "carscore/regress.hpp"
#include "carscore/rng.hpp"

namespace carscore {

enum class Criterion { Aic, Cp, Bic, Ric, FixedK, PValue, Cv };

inline std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::Aic: return "aic";
        case Criterion::Cp: return "cp";
        case Criterion::Bic: return "bic";
        case Criterion::Ric: return "ric";
        case Criterion::FixedK: return "fixed_k";
        case Criterion::PValue: return "pvalue";
        case Criterion::Cv: return "cv";
    }
    return "unknown";
}

struct CvCurve {
    std::vector<Index> k_grid;
    std::vector<double> mean_error;
    std::vector<double> std_error;
    Index units = 0;  // folds x repeats
};

struct SelectionResult {
    std::vector<Index> selected;
    Criterion criterion = Criterion::FixedK;
    double threshold_used = 0.0;          // omega_c^2, alpha or k
    std::vector<double> accumulated_r2;   // Omega_k^2 for k = 0..d
    std::vector<double> objective;        // penalized objective for k = 0..d (threshold criteria)
    double r_squared_used = 0.0;
    CvCurve cv;

    Index size() const noexcept { return static_cast<Index>(selected.size()); }
};

/// Penalty multiplier: 2 for AIC and Cp, log n for BIC, 2 log d for RIC.
inline double penalty(Criterion c, Index n, Index d) {
    switch (c) {
        case Criterion::Aic:
        case Criterion::Cp: return 2.0;
        case Criterion::Bic: return std::log(static_cast<double>(n));
        case Criterion::Ric: return 2.0 * std::log(static_cast<double>(d));
        default: fail(ErrorCode::InvalidCriterion, to_string(c) + " is not a penalized-RSS criterion");
    }
}

namespace detail {

inline std::vector<double> accumulate_ranked(const CarAnalysis& a) {
    std::vector<double> acc(a.ranking.size() + 1, 0.0);
    for (std::size_t k = 0; k < a.ranking.size(); ++k) acc[k + 1] = acc[k] + a.importance(a.ranking[k]);
    return acc;
}

inline std::vector<Index> top(const CarAnalysis& a, Index k) {
    return {a.ranking.begin(), a.ranking.begin() + k};
}

}  // namespace detail

/// Keeps exactly the variables with omega_j^2 > lambda_pen (1 - R^2) / n.
/// R^2 is the summed squared CAR score; when d >= n it is clamped to
/// [0, 1 - 1/n]. A perfect fit keeps every variable.
inline SelectionResult threshold_select(const CarAnalysis& analysis, Criterion criterion, Index n, Index d) {
    require(n > 1, ErrorCode::InvalidParameters, "n must exceed 1");
    require(d == analysis.omega.size(), ErrorCode::DimensionMismatch, "d does not match the analysis");
    const double pen = penalty(criterion, n, d);
    SelectionResult out;
    out.criterion = criterion;
    out.accumulated_r2 = detail::accumulate_ranked(analysis);
    const double upper = d >= n ? 1.0 - 1.0 / static_cast<double>(n) : 1.0;
    const double r2 = std::clamp(analysis.r_squared, 0.0, upper);
    out.r_squared_used = r2;
    const double cut = pen * (1.0 - r2) / static_cast<double>(n);
    out.objective.resize(out.accumulated_r2.size());
    for (std::size_t k = 0; k < out.objective.size(); ++k)
        out.objective[k] = 1.0 - out.accumulated_r2[k] + static_cast<double>(k) * cut;
    if (r2 >= 1.0 - 1e-12) {
        out.threshold_used = 0.0;
        out.selected = analysis.ranking;
        return out;
    }
    out.threshold_used = cut;
    for (Index j : analysis.ranking) {
        if (!(analysis.importance(j) > cut)) break;
        out.selected.push_back(j);
    }
    return out;
}

inline SelectionResult fixed_select(const CarAnalysis& analysis, Index k) {
    require(k >= 0 && k <= analysis.omega.size(), ErrorCode::InvalidParameters,
            "k = " + std::to_string(k) + " outside [0, d]");
    SelectionResult out;
    out.criterion = Criterion::FixedK;
    out.threshold_used = static_cast<double>(k);
    out.accumulated_r2 = detail::accumulate_ranked(analysis);
    out.r_squared_used = analysis.r_squared;
    out.selected = detail::top(analysis, k);
    return out;
}

/// Keeps variables whose CAR-score p-value under the empirical null is below alpha.
inline SelectionResult pvalue_select(const CarAnalysis& analysis, double alpha, Index n) {
    require(analysis.kind == EstimatorKind::Empirical, ErrorCode::NullUnavailable,
            "p-values need empirical estimates (estimator is " + to_string(analysis.kind) + ")");
    require(alpha > 0.0 && alpha <= 1.0, ErrorCode::InvalidAlpha, "alpha outside (0, 1]");
    const NullSpec spec = NullSpec::car(n);
    SelectionResult out;
    out.criterion = Criterion::PValue;
    out.threshold_used = alpha;
    out.accumulated_r2 = detail::accumulate_ranked(analysis);
    out.r_squared_used = analysis.r_squared;
    for (Index j : analysis.ranking) {
        if (!(p_value(spec, std::clamp(analysis.omega(j), -1.0, 1.0)) < alpha)) break;
        out.selected.push_back(j);
    }
    return out;
}

struct CvOptions {
    std::vector<Index> k_grid;  // empty: every feasible k
    Index folds = 5;
    Index repeats = 1;
    std::uint64_t seed = 0;
    EstimatorChoice estimator = EstimatorChoice::empirical();
};

/// Repeated k-fold cross-validation over model size. In every fold the
/// correlation model and ranking are re-estimated on the training part, the
/// top-k model is refitted and squared error is measured on the held-out
/// part. Picks the smallest k whose mean error is within one standard error
/// of the minimum.
inline SelectionResult cv_select(const Dataset& data, const CvOptions& opt) {
    data.validate();
    const Index n = data.rows();
    const Index d = data.cols();
    require(opt.folds >= 2, ErrorCode::FoldTooSmall, "need at least 2 folds");
    require(opt.folds <= n, ErrorCode::FoldTooSmall, "more folds than observations");
    require(opt.repeats >= 1, ErrorCode::InvalidConfig, "need at least one repeat");
    const Index largest_fold = (n + opt.folds - 1) / opt.folds;
    const Index min_train = n - largest_fold;
    require(min_train >= 3, ErrorCode::FoldTooSmall,
            "training part has " + std::to_string(min_train) + " rows; need 3");

    std::vector<Index> grid = opt.k_grid;
    if (grid.empty())
        for (Index k = 0; k <= std::min(d, min_train - 2); ++k) grid.push_back(k);
    for (Index k : grid) {
        require(k >= 0 && k <= d, ErrorCode::InvalidConfig, "k = " + std::to_string(k) + " outside [0, d]");
        require(k <= min_train - 2, ErrorCode::FoldTooSmall,
                "k = " + std::to_string(k) + " too large for training folds of " + std::to_string(min_train));
    }

    // Fold assignment per repeat from an independent stream.
    std::vector<std::vector<Index>> perms(static_cast<std::size_t>(opt.repeats));
    for (Index r = 0; r < opt.repeats; ++r) {
        auto& p = perms[static_cast<std::size_t>(r)];
        p.resize(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), Index{0});
        RandomStream rng(opt.seed, static_cast<std::uint64_t>(r), 0);
        rng.shuffle(p);
    }

    const auto units = static_cast<std::size_t>(opt.repeats * opt.folds);
    std::vector<std::vector<double>> errors(units);
    parallel_for(units, [&](std::size_t u) {
        const Index r = static_cast<Index>(u) / opt.folds;
        const Index f = static_cast<Index>(u) % opt.folds;
        const auto& p = perms[static_cast<std::size_t>(r)];
        const Index lo = f * n / opt.folds;
        const Index hi = (f + 1) * n / opt.folds;
        std::vector<Index> train;
        std::vector<Index> held;
        for (Index i = 0; i < n; ++i) (i >= lo && i < hi ? held : train).push_back(p[static_cast<std::size_t>(i)]);
        const Dataset tr = data.subset_rows(train);
        const Dataset te = data.subset_rows(held);
        CarAnalysis analysis;
        try {
            analysis = analyze(estimate(tr, opt.estimator));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateData) fail(ErrorCode::DegenerateFold, e.what());
            throw;
        }
        auto& out = errors[u];
        out.reserve(grid.size());
        for (Index k : grid) {
            const FittedModel m = fit_subset(tr, detail::top(analysis, k), opt.estimator);
            out.push_back((te.y - predict(m, te.x)).squaredNorm() / static_cast<double>(te.rows()));
        }
    });

    SelectionResult res;
    res.criterion = Criterion::Cv;
    res.cv.k_grid = grid;
    res.cv.units = static_cast<Index>(units);
    const auto m = static_cast<double>(units);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double sum = 0.0;
        for (const auto& e : errors) sum += e[g];
        const double mean = sum / m;
        double ss = 0.0;
        for (const auto& e : errors) ss += (e[g] - mean) * (e[g] - mean);
        res.cv.mean_error.push_back(mean);
        res.cv.std_error.push_back(units > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0);
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (res.cv.mean_error[g] < res.cv.mean_error[best]) best = g;
    const double bound = res.cv.mean_error[best] + res.cv.std_error[best];
    Index chosen = grid[best];
    for (std::size_t g = 0; g < grid.size(); ++g)
        if (res.cv.mean_error[g] <= bound) chosen = std::min(chosen, grid[g]);
    res.threshold_used = static_cast<double>(chosen);

    const CarAnalysis full = analyze(estimate(data, opt.estimator));
    res.accumulated_r2 = detail::accumulate_ranked(full);
    res.r_squared_used = full.r_squared;
    res.selected = detail::top(full, chosen);
    return res;
}

}  // namespace carscore
