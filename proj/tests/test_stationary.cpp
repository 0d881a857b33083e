#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "corrq/stationary.hpp"

using namespace corrq;

namespace {

// Stationary pmf of the birth-death chain with birth rate lambda and death
// rate min(k, n) + theta (k - n)^+, truncated at kmax.
std::vector<double> birth_death_pmf(int n, double lambda, double theta, int kmax) {
    std::vector<double> p(static_cast<std::size_t>(kmax) + 1);
    p[0] = 1.0;
    for (int k = 1; k <= kmax; ++k) {
        const double death = std::min(k, n) + theta * std::max(k - n, 0);
        p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k - 1)] * lambda / death;
    }
    double z = 0.0;
    for (double v : p) z += v;
    for (double& v : p) v /= z;
    return p;
}

EstimatorConfig long_run(std::size_t samples, double spacing, double burn_in) {
    EstimatorConfig c;
    c.samples = samples;
    c.spacing = spacing;
    c.burn_in = burn_in;
    return c;
}

}  // namespace

TEST(Stationary, ErlangCSingleServerMean) {
    // M/M/1 with rho = 0.5 has E[X] = 1.
    const ModelParams p = params_from_rate(1, 0.5, 1.0, CorrelationMode::none);
    const auto s = stationary_sample(p, long_run(20000, 5.0, 100.0), SeedSpec{11, "mm1"});
    const auto est = batch_means(s.samples, 20);
    EXPECT_NEAR(est.mean, 1.0, std::max(4.0 * est.std_error, 0.02));
    EXPECT_NEAR(est.mean, 1.0, 0.06);
}

TEST(Stationary, RegenerativeMeanMatchesMM1) {
    const ModelParams p = params_from_rate(1, 0.5, 1.0, CorrelationMode::none);
    const auto r = regenerative_mean_X(p, 40000, SeedSpec{12, "mm1"});
    EXPECT_EQ(r.cycles, 40000u);
    EXPECT_NEAR(r.mean, 1.0, 4.0 * r.std_error);
    EXPECT_LT(r.std_error, 0.03);
}

TEST(Stationary, ErlangAMatchesBirthDeathOracle) {
    struct Case {
        int n;
        double lambda, theta;
    };
    for (const Case c : {Case{1, 1.0, 1.0}, Case{2, 2.0, 0.5}}) {
        const ModelParams p = params_from_rate(c.n, c.lambda, c.theta, CorrelationMode::independent);
        const auto pmf = birth_death_pmf(c.n, c.lambda, c.theta, 80);
        double mean_x = 0.0;
        for (std::size_t k = 0; k < pmf.size(); ++k) mean_x += static_cast<double>(k) * pmf[k];

        const auto s = stationary_sample(p, long_run(20000, 5.0, 50.0), SeedSpec{13, "erlang_a", 
                                         static_cast<std::uint64_t>(c.n)});
        const auto est = batch_means(s.samples, 20);
        EXPECT_NEAR(est.mean, mean_x, 4.0 * est.std_error) << "n=" << c.n;

        std::vector<double> empty_ind;
        for (double x : s.samples) empty_ind.push_back(x == 0.0 ? 1.0 : 0.0);
        const auto p0 = batch_means(empty_ind, 20);
        EXPECT_NEAR(p0.mean, pmf[0], 4.0 * p0.std_error + 1e-3) << "n=" << c.n;
    }
}

TEST(Stationary, PerfectModeRunIsConsistent) {
    const ModelParams p = make_params(1, 0.0, 1.0, CorrelationMode::perfect);
    const auto run = stationary_run(p, long_run(2000, 2.0, 20.0), SeedSpec{14});
    EXPECT_EQ(run.X.size(), 2000u);
    EXPECT_EQ(run.invariants.total(), 0u);
    EXPECT_TRUE(run.conserved);
    for (std::size_t i = 0; i < run.X.size(); ++i) {
        EXPECT_EQ(run.Q[i], std::max(run.X[i] - 1.0, 0.0));
        EXPECT_GE(run.L[i], 0.0);
    }
}

TEST(Stationary, DefaultBurnInAndSpacingScaleWithN) {
    EstimatorConfig c;
    EXPECT_DOUBLE_EQ(c.spacing_for(4096), 8.0);
    EXPECT_DOUBLE_EQ(c.burn_in_for(4096), 160.0);
    c.spacing = 0.5;
    EXPECT_DOUBLE_EQ(c.spacing_for(4096), 0.5);
}

TEST(Stationary, RejectsBadConfig) {
    const ModelParams p = make_params(4, 0.5, 1.0);
    EstimatorConfig c;
    c.samples = 0;
    EXPECT_THROW(stationary_sample(p, c, SeedSpec{1}), ConfigError);
    c = EstimatorConfig{};
    c.spacing = 0.0;
    EXPECT_THROW(stationary_sample(p, c, SeedSpec{1}), ConfigError);
    c.spacing = -1.0;
    EXPECT_THROW(stationary_sample(p, c, SeedSpec{1}), ConfigError);
}

TEST(Stationary, DeterministicForSameSeed) {
    const ModelParams p = make_params(16, 0.5, 0.5);
    const auto a = stationary_sample(p, long_run(200, 1.0, 10.0), SeedSpec{21}, Observable::w_v);
    const auto b = stationary_sample(p, long_run(200, 1.0, 10.0), SeedSpec{21}, Observable::w_v);
    EXPECT_EQ(a.samples, b.samples);
    std::ostringstream os;
    write_samples_csv(os, std::vector<double>{0.5, 2.0});
    EXPECT_EQ(os.str(), "sample_index,value\n0,0.5\n1,2\n");
}
