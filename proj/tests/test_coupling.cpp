#include <gtest/gtest.h>

#include "corrq/coupling.hpp"

using namespace corrq;

TEST(CouplePcPc, IdenticalSystemsNeverDiffer) {
    // theta1 = theta2 is admissible only at 0, i.e. two identical Erlang-C systems.
    const ModelParams c = make_params(4, 0.5, 1.0, CorrelationMode::none);
    const auto same = couple_pc_pc(c, c, 1e9, SeedSpec{1, "pcpc"}, 20000);
    EXPECT_EQ(same.violations, 0u);
    EXPECT_EQ(same.customers_checked, 20000u);
}

TEST(CouplePcPc, BoundaryTheta) {
    const ModelParams p = make_params(4, 0.0, 0.3);
    ModelParams q = p;
    q.theta = 0.3 / (1.0 - 0.3);
    const auto r = couple_pc_pc(p, q, 1e9, SeedSpec{1, "pcpc"}, 20000);
    EXPECT_EQ(r.violations, 0u) << r.first_violation;
    EXPECT_EQ(r.customers_checked, 20000u);
}

TEST(CouplePcPc, SingleServer) {
    const ModelParams p1 = params_from_rate(1, 0.8, 0.4, CorrelationMode::perfect);
    const ModelParams p2 = params_from_rate(1, 0.8, 0.7, CorrelationMode::perfect);
    const auto r = couple_pc_pc(p1, p2, 1e9, SeedSpec{2, "pcpc"}, 100000);
    EXPECT_EQ(r.violations, 0u) << r.first_violation;
    EXPECT_EQ(r.customers_checked, 100000u);
    EXPECT_GT(r.epochs_checked, 100000u);
}

TEST(CouplePcPc, ErlangCDominatesWithExtraArrivals) {
    const ModelParams p1 = params_from_rate(8, 7.6, 1.0, CorrelationMode::none);
    const ModelParams p2 = params_from_rate(8, 7.2, 1.0, CorrelationMode::perfect);
    const auto r = couple_pc_pc(p1, p2, 1e9, SeedSpec{3, "pcpc"}, 50000);
    EXPECT_EQ(r.violations, 0u) << r.first_violation;
    EXPECT_EQ(r.customers_checked, 50000u);
}

TEST(CouplePcPc, Preconditions) {
    const ModelParams a = params_from_rate(2, 1.5, 0.4, CorrelationMode::perfect);
    EXPECT_THROW(couple_pc_pc(a, params_from_rate(3, 1.5, 0.7, CorrelationMode::perfect), 10.0, SeedSpec{1}),
                 ConfigError);
    EXPECT_THROW(couple_pc_pc(a, params_from_rate(2, 1.6, 0.7, CorrelationMode::perfect), 10.0, SeedSpec{1}),
                 ConfigError);
    EXPECT_THROW(couple_pc_pc(a, params_from_rate(2, 1.5, 0.5, CorrelationMode::perfect), 10.0, SeedSpec{1}),
                 ConfigError);
    EXPECT_THROW(couple_pc_pc(params_from_rate(2, 1.5, 1.2, CorrelationMode::perfect),
                              params_from_rate(2, 1.5, 9.0, CorrelationMode::perfect), 10.0, SeedSpec{1}),
                 ConfigError);
    EXPECT_THROW(couple_pc_pc(a, params_from_rate(2, 1.5, 0.7, CorrelationMode::independent), 10.0, SeedSpec{1}),
                 ConfigError);
    EXPECT_THROW(couple_pc_pc(params_from_rate(2, 2.5, 1.0, CorrelationMode::none),
                              params_from_rate(2, 2.5, 1.0, CorrelationMode::perfect), 10.0, SeedSpec{1}),
                 ConfigError);
    EXPECT_THROW(couple_pc_pc(a, a, 0.0, SeedSpec{1}), ConfigError);
}

TEST(CouplePcInf, NeverExceedsInfiniteServer) {
    const ModelParams p = make_params(4, -1.0, 1.0);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto r = couple_pc_infserver(p, 1000.0, SeedSpec{s, "pcinf"});
        EXPECT_EQ(r.violations, 0u) << r.first_violation;
        EXPECT_GT(r.epochs_checked, 1000u);
    }
    const ModelParams fast = make_params(4, 1.0, 1000.0);
    EXPECT_EQ(couple_pc_infserver(fast, 200.0, SeedSpec{9, "pcinf"}).violations, 0u);
}

TEST(CouplePcInf, RejectsNonPerfectMode) {
    EXPECT_THROW(couple_pc_infserver(make_params(4, 1.0, 1.0, CorrelationMode::none), 10.0, SeedSpec{1}),
                 ConfigError);
}

TEST(Dominance, ErlangAIsStochasticallySmaller) {
    EstimatorConfig cfg;
    cfg.samples = 600;
    for (double theta : {1.0, 1e3}) {
        const ModelParams p = make_params(16, -1.0, theta);
        const auto r = compare_pc_erlangA_stationary(p, cfg, SeedSpec{4, "dominance"});
        EXPECT_EQ(r.violations, 0u) << "theta=" << theta << " gap=" << r.max_cdf_gap;
        EXPECT_GT(r.ci_slack, 0.0);
        EXPECT_EQ(r.params["invariant_violations"], 0u);
    }
}

TEST(Dominance, DetectsReversedOrder) {
    std::vector<double> small(2000), big(2000);
    for (std::size_t i = 0; i < 2000; ++i) {
        small[i] = static_cast<double>(i % 10);
        big[i] = small[i] + 3.0;
    }
    EXPECT_EQ(dominance_report(big, small, 0.01).violations, 0u);
    EXPECT_EQ(dominance_report(small, big, 0.01).violations, 1u);
}

TEST(Dominance, InsufficientSamples) {
    const std::vector<double> few{1.0, 2.0, 3.0};
    EXPECT_THROW(dominance_report(few, few, 0.01), ConfigError);
    EXPECT_EQ(min_samples_for_dkw(0.01), 12u);
}

TEST(Report, JsonFields) {
    const ModelParams p1 = params_from_rate(1, 0.8, 0.4, CorrelationMode::perfect);
    const ModelParams p2 = params_from_rate(1, 0.8, 0.7, CorrelationMode::perfect);
    const auto j = couple_pc_pc(p1, p2, 100.0, SeedSpec{7, "pcpc"}).to_json();
    EXPECT_EQ(j["kind"], "pc_pc");
    EXPECT_EQ(j["violations"], 0u);
    EXPECT_EQ(j["seed"], 7u);
    EXPECT_TRUE(j.contains("customers_checked"));
    EXPECT_TRUE(j.contains("epochs_checked"));
    EXPECT_EQ(j["params"]["system1"]["theta"], 0.4);
    EXPECT_EQ(parse_coupling_kind("pc_infserver"), CouplingKind::pc_infserver);
    EXPECT_THROW(parse_coupling_kind("bogus"), ConfigError);
}
