#include <gtest/gtest.h>

#include <cmath>

#include "carscore/estimation.hpp"
#include "support.hpp"

using namespace carscore;
namespace ts = testing_support;

namespace {

// Direct O(n d^2) evaluation of the shrinkage intensity formula.
double naive_intensity(const Matrix& xs) {
    const Index n = xs.rows();
    const Index d = xs.cols();
    double num = 0.0;
    double den = 0.0;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) {
            if (i == j) continue;
            double wbar = 0.0;
            for (Index k = 0; k < n; ++k) wbar += xs(k, i) * xs(k, j);
            wbar /= static_cast<double>(n);
            double ss = 0.0;
            for (Index k = 0; k < n; ++k) ss += std::pow(xs(k, i) * xs(k, j) - wbar, 2);
            num += static_cast<double>(n) / std::pow(static_cast<double>(n - 1), 3) * ss;
            const double r = wbar * static_cast<double>(n) / static_cast<double>(n - 1);
            den += r * r;
        }
    return std::clamp(num / den, 0.0, 1.0);
}

}  // namespace

TEST(Dataset, ValidationErrors) {
    try {
        make_dataset(Matrix::Ones(2, 2), Vector::Ones(2)).validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
    }
    try {
        make_dataset(Matrix::Ones(5, 2), Vector::Ones(4)).validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(Standardize, UnitSampleVarianceAndZeroMean) {
    RandomStream rng(1, 0);
    const Dataset d = ts::random_dataset(rng, 40, 6);
    const Standardized s = standardize(d);
    for (Index j = 0; j < 6; ++j) {
        EXPECT_NEAR(s.x.col(j).mean(), 0.0, 1e-14);
        EXPECT_NEAR(s.x.col(j).squaredNorm() / 39.0, 1.0, 1e-12);
    }
    EXPECT_NEAR(s.y.squaredNorm() / 39.0, 1.0, 1e-12);
}

TEST(Standardize, ConstantColumnIsNamed) {
    Matrix x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    try {
        standardize(make_dataset(x, Vector::LinSpaced(4, 0, 3), {"a", "flat"}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
}

TEST(Empirical, MatchesPearsonCorrelations) {
    RandomStream rng(2, 0);
    const Dataset d = ts::random_dataset(rng, 30, 4);
    const CorrelationModel cm = estimate_empirical(d);
    auto pearson = [](const Vector& a, const Vector& b) {
        const Vector ca = a.array() - a.mean();
        const Vector cb = b.array() - b.mean();
        return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    };
    for (Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(cm.p_xy()(i), pearson(d.x.col(i), d.y), 1e-12);
        for (Index j = 0; j < 4; ++j) EXPECT_NEAR(cm.p()(i, j), pearson(d.x.col(i), d.x.col(j)), 1e-12);
    }
    EXPECT_EQ(cm.kind(), EstimatorKind::Empirical);
    EXPECT_EQ(cm.default_dof(), 25);
}

TEST(Shrinkage, IntensityMatchesNaiveFormula) {
    RandomStream rng(3, 0);
    for (Index d : {3, 8, 20}) {
        const Dataset data = ts::random_dataset(rng, 15, d);
        const Standardized s = standardize(data);
        EXPECT_NEAR(shrinkage_intensity(s.x), naive_intensity(s.x), 1e-12) << "d = " << d;
    }
}

TEST(Shrinkage, IntensityIsZeroForSingleVariable) {
    RandomStream rng(4, 0);
    const Dataset data = ts::random_dataset(rng, 20, 1);
    EXPECT_EQ(shrinkage_intensity(standardize(data).x), 0.0);
    EXPECT_EQ(estimate_shrinkage(data).kind(), EstimatorKind::Empirical);
}

TEST(Shrinkage, ShrunkMatrixIsConvexCombination) {
    RandomStream rng(5, 0);
    const Dataset data = ts::random_dataset(rng, 12, 30);
    const CorrelationModel emp = estimate_empirical(data);
    const CorrelationModel sh = estimate_shrinkage(data, 0.4);
    const Matrix expected = 0.6 * emp.p().matrix() + 0.4 * Matrix::Identity(30, 30);
    EXPECT_LT((sh.p().matrix() - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(sh.p_xy(), emp.p_xy());
    EXPECT_TRUE(sh.uses_fast_path());
    EXPECT_GT(spectral_decomposition(sh.p()).smallest(), 0.0);
}

TEST(Shrinkage, FixedLambdaRangeAndZero) {
    RandomStream rng(6, 0);
    const Dataset data = ts::random_dataset(rng, 20, 5);
    EXPECT_THROW(estimate_shrinkage(data, 1.2), Error);
    EXPECT_THROW(estimate_shrinkage(data, -0.2), Error);
    EXPECT_EQ(estimate_shrinkage(data, 0.0).kind(), EstimatorKind::Empirical);
    const CorrelationModel full = estimate_shrinkage(data, 1.0);
    EXPECT_TRUE(full.p().matrix().isIdentity(0.0));
}

TEST(Shrinkage, FastPathAgreesWithDensePath) {
    RandomStream rng(7, 0);
    const Dataset data = ts::random_dataset(rng, 10, 40);
    const CorrelationModel fast = estimate_shrinkage(data);
    ASSERT_TRUE(fast.uses_fast_path());
    const CorrelationModel dense(fast.p(), fast.p_xy(), fast.moments(), fast.lambda(), fast.n(), fast.kind());
    ASSERT_FALSE(dense.uses_fast_path());
    EXPECT_LT((fast.apply_power(-0.5, fast.p_xy()) - dense.apply_power(-0.5, dense.p_xy())).cwiseAbs().maxCoeff(),
              1e-10);
}

TEST(Population, ExampleOneMarginalCorrelations) {
    const SymMatrix p(ts::autoregressive(8, 0.5));
    Vector b(8);
    b << 3, 1.5, 0, 0, 2, 0, 0, 0;
    const CorrelationModel cm = population_model(p, b, 3.0);
    // y variance b'Pb + sigma^2 computed directly
    const double var_y = b.dot(p.matrix() * b) + 9.0;
    EXPECT_NEAR(cm.moments().y_sd, std::sqrt(var_y), 1e-12);
    const Vector rho = p.matrix() * b / std::sqrt(var_y);
    EXPECT_LT((cm.p_xy() - rho).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(cm.kind(), EstimatorKind::Population);
}

TEST(CorrelationModel, RestrictTakesPrincipalBlock) {
    const SymMatrix p(ts::autoregressive(5, 0.5));
    const CorrelationModel cm = population_model(p, Vector::Ones(5), 1.0);
    const CorrelationModel sub = cm.restrict(std::vector<Index>{4, 1});
    EXPECT_EQ(sub.dimension(), 2);
    EXPECT_DOUBLE_EQ(sub.p()(0, 1), std::pow(0.5, 3));
    EXPECT_DOUBLE_EQ(sub.p_xy()(0), cm.p_xy()(4));
}

TEST(EstimatorChoice, DescribeAndDispatch) {
    RandomStream rng(8, 0);
    const Dataset data = ts::random_dataset(rng, 25, 4);
    EXPECT_EQ(EstimatorChoice::empirical().describe(), "empirical");
    EXPECT_EQ(EstimatorChoice::shrinkage().describe(), "shrinkage");
    EXPECT_EQ(estimate(data, EstimatorChoice::shrinkage(0.5)).lambda(), 0.5);
    EXPECT_EQ(estimate(data, EstimatorChoice::empirical()).lambda(), 0.0);
}
