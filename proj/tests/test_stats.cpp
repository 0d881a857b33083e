#include <gtest/gtest.h>

#include <cmath>

#include "corrq/limits.hpp"
#include "corrq/rng.hpp"
#include "corrq/stats.hpp"

using namespace corrq;

TEST(Stats, KsOfExactUniformGrid) {
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back((i + 0.5) / 100.0);
    EXPECT_NEAR(ks_statistic(xs, [](double x) { return std::clamp(x, 0.0, 1.0); }), 0.005, 1e-12);
}

TEST(Stats, KsSingleSample) {
    const std::vector<double> one{0.3};
    EXPECT_NEAR(ks_statistic(one, [](double x) { return x; }), 0.7, 1e-15);
}

TEST(Stats, KsSelfTestNormal) {
    Stream rng(SeedSpec{3, "ks"});
    std::vector<double> xs(20000);
    for (double& x : xs) x = rng.normal();
    EXPECT_LE(ks_statistic(xs, normal_cdf), ks_critical(xs.size(), 0.001));
    for (double& x : xs) x += 0.1;
    EXPECT_GT(ks_statistic(xs, normal_cdf), ks_critical(xs.size(), 0.001));
}

TEST(Stats, KsEmptyThrows) {
    EXPECT_THROW(ks_statistic(std::vector<double>{}, normal_cdf), ConfigError);
}

TEST(Stats, SlopeFitExactLine) {
    const std::vector<double> n{256, 1024, 4096};
    std::vector<double> y;
    for (double v : n) y.push_back(1.4 * std::pow(v, 0.75));
    const auto f = loglog_slope_fit(n, y);
    EXPECT_NEAR(f.slope, 0.75, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 1.4, 1e-10);
    EXPECT_NEAR(f.slope_se, 0.0, 1e-10);
}

TEST(Stats, SlopeFitTwoPointsHasNoStandardError) {
    const auto f = slope_fit(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 3.0});
    EXPECT_DOUBLE_EQ(f.slope, 2.0);
    EXPECT_TRUE(std::isnan(f.slope_se));
}

TEST(Stats, SlopeFitDegenerateThrows) {
    EXPECT_THROW(slope_fit(std::vector<double>{2.0, 2.0, 2.0}, std::vector<double>{1.0, 2.0, 3.0}), ConfigError);
    EXPECT_THROW(slope_fit(std::vector<double>{1.0}, std::vector<double>{1.0}), ConfigError);
    EXPECT_THROW(loglog_slope_fit(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 1.0}), ConfigError);
}

TEST(Stats, BatchMeans) {
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back(i % 2 == 0 ? 1.0 : 3.0);
    const auto e = batch_means(xs, 10);
    EXPECT_DOUBLE_EQ(e.mean, 2.0);
    EXPECT_DOUBLE_EQ(e.std_error, 0.0);
    EXPECT_EQ(e.batches, 10u);
    EXPECT_THROW(batch_means(xs, 1), ConfigError);
    EXPECT_THROW(batch_means(std::vector<double>{1.0, 2.0}, 3), ConfigError);
}

TEST(Stats, IidMeanStandardError) {
    const auto e = iid_mean(std::vector<double>{1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.std_error, std::sqrt((5.0 / 3.0) / 4.0), 1e-15);
}

TEST(Stats, DkwEpsilon) {
    EXPECT_NEAR(dkw_epsilon(1000, 0.05), std::sqrt(std::log(40.0) / 2000.0), 1e-15);
    EXPECT_THROW(dkw_epsilon(0, 0.05), ConfigError);
    EXPECT_THROW(dkw_epsilon(10, 1.5), ConfigError);
    const std::vector<double> s{1.0, 2.0, 2.0, 4.0};
    EXPECT_DOUBLE_EQ(ecdf_sorted(s, 2.0), 0.75);
    EXPECT_DOUBLE_EQ(ecdf_sorted(s, 0.5), 0.0);
}
