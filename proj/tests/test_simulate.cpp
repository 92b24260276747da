#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "carscore/parallel.hpp"
#include "carscore/simulate.hpp"
#include "support.hpp"

using namespace carscore;
namespace ts = testing_support;

namespace {

Matrix sample_covariance(const Matrix& x) {
    const Matrix c = x.rowwise() - x.colwise().mean();
    return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

bool same_records(const SimulationReport& a, const SimulationReport& b) {
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.relative_me != y.relative_me || x.true_positives != y.true_positives ||
            x.false_positives != y.false_positives || x.model_size != y.model_size)
            return false;
    }
    return a.aggregates.mean_rme == b.aggregates.mean_rme && a.aggregates.sd_of_mean == b.aggregates.sd_of_mean;
}

}  // namespace

TEST(Scenario, Definitions) {
    const Scenario e1 = Scenario::ex1();
    EXPECT_EQ(e1.d(), 8);
    EXPECT_DOUBLE_EQ(e1.correlation()(0, 3), 0.125);
    EXPECT_EQ(e1.true_nonzero(), 3);
    EXPECT_DOUBLE_EQ(Scenario::ex2().correlation()(1, 2), 0.85);
    const Scenario e3 = Scenario::ex3();
    EXPECT_EQ(e3.d(), 40);
    EXPECT_EQ(e3.correlation()(2, 9), 0.9);
    EXPECT_EQ(e3.correlation()(2, 10), 0.0);
    EXPECT_EQ(e3.true_nonzero(), 10);
    EXPECT_EQ(e3.b()(7), -2.0);
    const Scenario e4 = Scenario::ex4();
    EXPECT_EQ(e4.correlation()(0, 2), 0.9);
    EXPECT_EQ(e4.correlation()(2, 3), 0.0);
    EXPECT_EQ(e4.correlation()(4, 5), 0.9);
    EXPECT_EQ(e4.true_nonzero(), 6);
    EXPECT_TRUE(e4.default_estimator().is_shrinkage());
    EXPECT_FALSE(e1.default_estimator().is_shrinkage());
    EXPECT_THROW(Scenario::by_name("ex9"), Error);
}

TEST(Scenario, CustomMustBePositiveDefinite) {
    Matrix p(3, 3);
    p << 1, 0.9, 0.9, 0.9, 1, -0.9, 0.9, -0.9, 1;
    try {
        Scenario::custom(SymMatrix(p), Vector::Ones(3), 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
}

TEST(Sampler, CovarianceAndResponseVariance) {
    const Scenario s = Scenario::ex1();
    RandomStream rng(1, 0);
    const Dataset data = sample(s, 100000, rng);
    EXPECT_LT((sample_covariance(data.x) - s.correlation().matrix()).cwiseAbs().maxCoeff(), 0.02);
    const double expected = s.b().dot(s.correlation().matrix() * s.b()) + 1.0;
    const double var_y = (data.y.array() - data.y.mean()).square().sum() / 99999.0;
    EXPECT_NEAR(var_y / expected, 1.0, 0.02);
    const Matrix c = sample_covariance(data.x);
    EXPECT_NEAR(c(0, 1) / std::sqrt(c(0, 0) * c(1, 1)), 0.5, 0.01);
}

TEST(Sampler, ExampleThreeBlockCorrelation) {
    RandomStream rng(2, 0);
    const Dataset data = sample(Scenario::ex3(), 100000, rng);
    const Matrix c = sample_covariance(data.x.leftCols(12));
    for (Index i = 0; i < 10; ++i)
        for (Index j = i + 1; j < 10; ++j) EXPECT_NEAR(c(i, j) / std::sqrt(c(i, i) * c(j, j)), 0.9, 0.01);
    EXPECT_NEAR(c(0, 11), 0.0, 0.02);
}

TEST(Sampler, NoiselessLimit) {
    RandomStream rng(3, 0);
    const Dataset data = sample(Scenario::ex1().with_sigma(1e-8), 200, rng);
    std::vector<Index> all(8);
    std::iota(all.begin(), all.end(), Index{0});
    EXPECT_GE(fit_ols(data, all).r_squared, 0.9999);
}

TEST(Experiment, AccountingAndDeterminismAcrossThreads) {
    setenv("CAR_THREADS", "1", 1);
    const SimulationReport one = run_experiment(Scenario::ex1(), 30, 1.0, Method::CarEmpirical, 24, 5);
    setenv("CAR_THREADS", "8", 1);
    const SimulationReport eight = run_experiment(Scenario::ex1(), 30, 1.0, Method::CarEmpirical, 24, 5);
    unsetenv("CAR_THREADS");
    EXPECT_TRUE(same_records(one, eight));
    for (const auto& r : one.records) {
        EXPECT_EQ(r.true_positives + r.false_positives, r.model_size);
        EXPECT_GE(r.relative_me, 0.0);
    }
    const SimulationReport other = run_experiment(Scenario::ex1(), 30, 1.0, Method::CarEmpirical, 24, 6);
    EXPECT_FALSE(same_records(one, other));
}

TEST(Experiment, OlsKeepsEveryVariable) {
    const SimulationReport r = run_experiment(Scenario::ex1(), 50, 1.0, Method::OlsFull, 20, 1);
    for (const auto& rec : r.records) {
        EXPECT_EQ(rec.true_positives, 3);
        EXPECT_EQ(rec.false_positives, 5);
    }
}

TEST(Experiment, UnavailableMethods) {
    try {
        run_experiment(Scenario::ex3(), 30, 3.0, Method::OlsFull, 2, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MethodUnavailable);
    }
    EXPECT_THROW(run_experiment(Scenario::ex3(), 30, 3.0, Method::CarEmpirical, 2, 1), Error);
    EXPECT_THROW(run_experiment(Scenario::ex1(), 30, 1.0, Method::CarEmpirical, 0, 1), Error);
}

TEST(Experiment, AllRankingMethodsRun) {
    for (Method m : {Method::PcorRanked, Method::GeniziRanked, Method::MarginalRanked, Method::CarShrinkage}) {
        const SimulationReport r = run_experiment(Scenario::ex2(), 40, 1.0, m, 10, 2);
        EXPECT_EQ(r.records.size(), 10u);
        EXPECT_TRUE(std::isfinite(r.aggregates.mean_rme)) << to_string(m);
    }
    const SimulationReport hd = run_experiment(Scenario::ex4(), 20, 6.0, Method::GeniziRanked, 5, 2);
    EXPECT_EQ(hd.config.estimator.describe(), "shrinkage");
}

TEST(Experiment, CarBeatsFullLeastSquaresOnExampleOne) {
    const double car = run_experiment(Scenario::ex1(), 100, 1.0, Method::CarEmpirical, 100, 3).aggregates.mean_rme;
    const double ols = run_experiment(Scenario::ex1(), 100, 1.0, Method::OlsFull, 100, 3).aggregates.mean_rme;
    EXPECT_LT(car, ols);
}

TEST(Aggregate, Conventions) {
    const std::vector<ReplicateRecord> single{{0.4, 2, 1, 3}};
    const Aggregates a = aggregate_records(single);
    EXPECT_EQ(a.mean_rme, 0.4);
    EXPECT_EQ(a.sd_of_mean, 0.0);
    EXPECT_EQ(a.median_size, 3.0);
    const Aggregates twin = aggregate_records({{0.25, 1, 0, 1}, {0.25, 1, 0, 1}});
    EXPECT_EQ(twin.sd_of_mean, 0.0);
    EXPECT_THROW(aggregate_records({}), Error);
    EXPECT_THROW(aggregate({}), Error);
}

TEST(Aggregate, MatchesDirectRecomputation) {
    RandomStream rng(4, 0);
    std::vector<ReplicateRecord> recs;
    for (int i = 0; i < 200; ++i) {
        ReplicateRecord r;
        r.relative_me = rng.uniform();
        r.true_positives = static_cast<Index>(rng.below(4));
        r.false_positives = static_cast<Index>(rng.below(6));
        r.model_size = r.true_positives + r.false_positives;
        recs.push_back(r);
    }
    const Aggregates a = aggregate_records(recs);
    double sum = 0.0;
    for (const auto& r : recs) sum += r.relative_me;
    const double mean = sum / 200.0;
    double ss = 0.0;
    for (const auto& r : recs) ss += (r.relative_me - mean) * (r.relative_me - mean);
    EXPECT_NEAR(a.mean_rme, mean, 1e-14);
    EXPECT_NEAR(a.sd_of_mean, std::sqrt(ss / 199.0 / 200.0), 1e-14);
    std::vector<Index> sizes;
    double tp = 0.0;
    for (const auto& r : recs) {
        sizes.push_back(r.model_size);
        tp += static_cast<double>(r.true_positives);
    }
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(a.median_size, 0.5 * static_cast<double>(sizes[99] + sizes[100]));
    EXPECT_NEAR(a.mean_tp, tp / 200.0, 1e-14);

    SimulationReport report;
    report.config = {"ex1", 50, 1.0, Method::CarEmpirical, 200, 1, EstimatorChoice::empirical()};
    report.records = recs;
    report.aggregates = a;
    const auto rows = aggregate({report});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].rme_x1000, 1000.0 * mean, 1e-10);
    EXPECT_EQ(rows[0].tp_fp, format_fixed(a.mean_tp, 1) + "+" + format_fixed(a.mean_fp, 1));
}
