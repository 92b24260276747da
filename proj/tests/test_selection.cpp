#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "carscore/selection.hpp"
#include "support.hpp"

using namespace carscore;
namespace ts = testing_support;

TEST(Penalty, ValuesPerCriterion) {
    EXPECT_EQ(penalty(Criterion::Aic, 50, 10), 2.0);
    EXPECT_EQ(penalty(Criterion::Cp, 50, 10), 2.0);
    EXPECT_DOUBLE_EQ(penalty(Criterion::Bic, 50, 10), std::log(50.0));
    EXPECT_DOUBLE_EQ(penalty(Criterion::Ric, 50, 10), 2.0 * std::log(10.0));
    try {
        penalty(Criterion::Cv, 50, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidCriterion);
    }
}

TEST(Threshold, KeepsExactlyScoresAboveCriticalLevel) {
    RandomStream rng(1, 0);
    const Dataset data = ts::random_dataset(rng, 60, 8);
    const CarAnalysis a = analyze(estimate_empirical(data));
    const SelectionResult s = threshold_select(a, Criterion::Bic, 60, 8);
    const double cut = std::log(60.0) * (1.0 - a.r_squared) / 60.0;
    EXPECT_NEAR(s.threshold_used, cut, 1e-15);
    std::set<Index> expected;
    for (Index j = 0; j < 8; ++j)
        if (a.importance(j) > cut) expected.insert(j);
    EXPECT_EQ(std::set<Index>(s.selected.begin(), s.selected.end()), expected);
    ASSERT_EQ(s.accumulated_r2.size(), 9u);
    EXPECT_NEAR(s.accumulated_r2.back(), a.r_squared, 1e-12);
}

TEST(Threshold, EqualsBruteForcePenalizedRss) {
    RandomStream rng(2, 0);
    int agreements = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const Index n = 20 + static_cast<Index>(rng.below(60));
        const Index d = 2 + static_cast<Index>(rng.below(10));
        const Dataset data = ts::random_dataset(rng, n, d, 1.0 + 2.0 * rng.uniform());
        const CarAnalysis a = analyze(estimate_empirical(data));
        for (Criterion c : {Criterion::Aic, Criterion::Bic, Criterion::Ric}) {
            const SelectionResult s = threshold_select(a, c, n, d);
            const std::vector<Index> oracle = ts::brute_force_prefix(data, penalty(c, n, d));
            EXPECT_EQ(s.selected, oracle) << "instance " << inst << " criterion " << to_string(c);
            agreements += s.selected == oracle;
        }
    }
    EXPECT_EQ(agreements, 300);
}

TEST(Threshold, ClampsWhenDimensionExceedsSamples) {
    RandomStream rng(3, 0);
    const Dataset data = ts::random_dataset(rng, 10, 30);
    const CarAnalysis a = analyze(estimate_shrinkage(data));
    const SelectionResult s = threshold_select(a, Criterion::Aic, 10, 30);
    EXPECT_LE(s.r_squared_used, 1.0 - 1.0 / 10.0);
    EXPECT_GT(s.threshold_used, 0.0);
}

TEST(Threshold, PerfectFitKeepsEverything) {
    CarAnalysis a;
    a.omega = Vector{{0.8, 0.6}};
    a.importance = a.omega.cwiseProduct(a.omega);
    a.ranking = {0, 1};
    a.r_squared = 1.0;
    const SelectionResult s = threshold_select(a, Criterion::Bic, 30, 2);
    EXPECT_EQ(s.selected, (std::vector<Index>{0, 1}));
}

TEST(Fixed, TopKAndRange) {
    RandomStream rng(4, 0);
    const CarAnalysis a = analyze(estimate_empirical(ts::random_dataset(rng, 40, 6)));
    const SelectionResult s = fixed_select(a, 3);
    EXPECT_EQ(s.selected, std::vector<Index>(a.ranking.begin(), a.ranking.begin() + 3));
    EXPECT_TRUE(fixed_select(a, 0).selected.empty());
    EXPECT_THROW(fixed_select(a, 7), Error);
}

TEST(PValueSelect, CutsRankingAtAlpha) {
    RandomStream rng(5, 0);
    const Dataset data = ts::random_dataset(rng, 50, 8);
    const CarAnalysis a = analyze(estimate_empirical(data));
    const SelectionResult s = pvalue_select(a, 0.05, 50);
    const NullSpec spec = NullSpec::car(50);
    for (std::size_t r = 0; r < a.ranking.size(); ++r) {
        const bool significant = p_value(spec, a.omega(a.ranking[r])) < 0.05;
        if (r < s.selected.size()) EXPECT_TRUE(significant);
        if (r == s.selected.size()) EXPECT_FALSE(significant);
    }
    const CarAnalysis shrunk = analyze(estimate_shrinkage(ts::random_dataset(rng, 10, 20)));
    try {
        pvalue_select(shrunk, 0.05, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NullUnavailable);
    }
    EXPECT_THROW(pvalue_select(a, 0.0, 50), Error);
}

TEST(CrossValidation, LeaveOneOutMatchesDirectRefit) {
    RandomStream rng(6, 0);
    const Index n = 12;
    Matrix x = ts::normal_matrix(rng, n, 1);
    const Vector y = (2.0 * x.col(0) + ts::normal_vector(rng, n)).array() + 1.0;
    const Dataset data = make_dataset(x, y);
    CvOptions opt;
    opt.folds = n;
    opt.seed = 3;
    const SelectionResult s = cv_select(data, opt);
    ASSERT_EQ(s.cv.k_grid, (std::vector<Index>{0, 1}));
    // Oracle: leave each row out and refit by closed-form simple regression.
    double err0 = 0.0;
    double err1 = 0.0;
    for (Index i = 0; i < n; ++i) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            sx += x(j, 0);
            sy += y(j);
            sxx += x(j, 0) * x(j, 0);
            sxy += x(j, 0) * y(j);
        }
        const double m = n - 1.0;
        const double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
        const double icpt = sy / m - slope * sx / m;
        err0 += std::pow(y(i) - sy / m, 2);
        err1 += std::pow(y(i) - icpt - slope * x(i, 0), 2);
    }
    EXPECT_NEAR(s.cv.mean_error[0], err0 / n, 1e-10);
    EXPECT_NEAR(s.cv.mean_error[1], err1 / n, 1e-10);
    EXPECT_EQ(s.cv.units, n);
}

TEST(CrossValidation, ReproducibleAndThreadIndependent) {
    RandomStream rng(7, 0);
    const Dataset data = ts::random_dataset(rng, 40, 6);
    CvOptions opt;
    opt.folds = 5;
    opt.repeats = 3;
    opt.seed = 99;
    const SelectionResult a = cv_select(data, opt);
    const SelectionResult b = cv_select(data, opt);
    EXPECT_EQ(a.selected, b.selected);
    EXPECT_EQ(a.cv.mean_error, b.cv.mean_error);
    opt.seed = 100;
    EXPECT_NE(cv_select(data, opt).cv.mean_error, a.cv.mean_error);
}

TEST(CrossValidation, OneStandardErrorRule) {
    RandomStream rng(8, 0);
    const Dataset data = ts::random_dataset(rng, 50, 6);
    CvOptions opt;
    opt.seed = 5;
    opt.repeats = 2;
    const SelectionResult s = cv_select(data, opt);
    std::size_t best = 0;
    for (std::size_t g = 0; g < s.cv.k_grid.size(); ++g)
        if (s.cv.mean_error[g] < s.cv.mean_error[best]) best = g;
    const Index chosen = s.size();
    for (std::size_t g = 0; g < s.cv.k_grid.size(); ++g)
        if (s.cv.k_grid[g] < chosen) EXPECT_GT(s.cv.mean_error[g], s.cv.mean_error[best] + s.cv.std_error[best]);
    EXPECT_LE(s.cv.mean_error[static_cast<std::size_t>(chosen)], s.cv.mean_error[best] + s.cv.std_error[best]);
}

TEST(CrossValidation, FoldPreconditions) {
    RandomStream rng(9, 0);
    const Dataset data = ts::random_dataset(rng, 5, 2);
    CvOptions opt;
    opt.folds = 1;
    EXPECT_THROW(cv_select(data, opt), Error);
    opt.folds = 2;  // training part of 2 rows
    try {
        cv_select(data, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FoldTooSmall);
    }
    opt.folds = 5;
    opt.k_grid = {3};
    EXPECT_THROW(cv_select(data, opt), Error);
}

TEST(CrossValidation, ShrinkageInHighDimension) {
    RandomStream rng(10, 0);
    const Dataset data = ts::random_dataset(rng, 20, 50);
    CvOptions opt;
    opt.seed = 1;
    opt.estimator = EstimatorChoice::shrinkage();
    const SelectionResult s = cv_select(data, opt);
    EXPECT_EQ(s.cv.k_grid.back(), 14);
    EXPECT_LE(s.size(), 14);
}
