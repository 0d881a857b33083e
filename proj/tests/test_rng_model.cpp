#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "corrq/model.hpp"
#include "corrq/rng.hpp"

using namespace corrq;

TEST(MakeParams, SquareRootStaffing) {
    EXPECT_DOUBLE_EQ(make_params(100, 1.0, 0.5).lambda, 90.0);
    EXPECT_DOUBLE_EQ(make_params(100, -1.0, 1.0).lambda, 110.0);
    EXPECT_DOUBLE_EQ(make_params(64, 0.0, 2.0).lambda, 64.0);
    EXPECT_EQ(make_params(64, 0.0, 2.0).mu, 1.0);
}

TEST(MakeParams, Rejections) {
    EXPECT_THROW(make_params(100, 1.0, 0.0), ConfigError);
    EXPECT_THROW(make_params(100, 1.0, -1.0), ConfigError);
    EXPECT_THROW(make_params(100, 10.0, 1.0), StaffingInfeasible);
    EXPECT_THROW(make_params(100, 11.0, 1.0), StaffingInfeasible);
    EXPECT_THROW(make_params(0, 0.0, 1.0), ConfigError);
}

TEST(MakeParams, RoundTripProperty) {
    Stream rng(SeedSpec{7, "roundtrip"});
    for (int i = 0; i < 2000; ++i) {
        const int n = 1 + static_cast<int>(rng.next() % 20000);
        const double root = std::sqrt(static_cast<double>(n));
        const double beta = (2.0 * rng.uniform_open() - 1.0) * 0.99 * root;
        const ModelParams p = make_params(n, beta, 1.0);
        ASSERT_GT(p.lambda, 0.0);
        const double back = (n - p.lambda) / root;
        ASSERT_NEAR(back, beta, 4.0 * std::numeric_limits<double>::epsilon() * n / root) << n << ' ' << beta;
    }
}

TEST(ParamsFromRate, DerivesBeta) {
    const ModelParams p = params_from_rate(1, 0.8, 0.4);
    EXPECT_DOUBLE_EQ(p.lambda, 0.8);
    EXPECT_NEAR(p.beta, 0.2, 1e-15);
}

TEST(SampleCustomer, PerfectModeDeadline) {
    const ModelParams p = make_params(4, 0.0, 2.0);
    const Customer c = customer_with_service(p, 3.0, 1.0);
    EXPECT_DOUBLE_EQ(c.patience, 0.5);
    EXPECT_DOUBLE_EQ(c.abandon_deadline, 3.5);
}

TEST(SampleCustomer, NoneModeIsInfinitelyPatient) {
    Stream rng(1);
    const ModelParams p = make_params(4, 0.0, 1.0, CorrelationMode::none);
    const Customer c = sample_customer(rng, p, 2.0);
    EXPECT_TRUE(std::isinf(c.patience));
    EXPECT_TRUE(std::isinf(c.abandon_deadline));
}

TEST(SampleCustomer, PerfectModeBitExactProperty) {
    for (double theta : {0.1, 0.3, 0.5, 1.0, 1.7, 3.0, 7.0}) {
        const ModelParams p = make_params(10, 0.0, theta);
        Stream rng(SeedSpec{3, "bitexact", 10, 0, std::to_string(theta)});
        for (int i = 0; i < 20000; ++i) {
            const Customer c = sample_customer(rng, p, 0.0);
            ASSERT_EQ(theta * c.patience, c.service_req);
            ASSERT_EQ(c.abandon_deadline, c.arrival_time + c.patience);
        }
    }
}

TEST(SampleCustomer, MonteCarloMeanAndCorrelation) {
    const ModelParams p = make_params(10, 0.0, 1.0);
    Stream rng(SeedSpec{11, "moments"});
    const int n = 100000;
    double ss = 0, st = 0, sss = 0, stt = 0, sst = 0;
    for (int i = 0; i < n; ++i) {
        const Customer c = sample_customer(rng, p, 0.0);
        ss += c.service_req;
        st += c.patience;
        sss += c.service_req * c.service_req;
        stt += c.patience * c.patience;
        sst += c.service_req * c.patience;
    }
    const double ms = ss / n;
    // 3 sigma for Exp(1) at 1e5 draws is 0.0095.
    EXPECT_GE(ms, 0.99);
    EXPECT_LE(ms, 1.01);
    const double mt = st / n;
    const double cov = sst / n - ms * mt;
    const double corr = cov / std::sqrt((sss / n - ms * ms) * (stt / n - mt * mt));
    EXPECT_NEAR(corr, 1.0, 1e-12);
}

TEST(SampleCustomer, IndependentModeMoments) {
    const ModelParams p = make_params(10, 0.0, 2.0, CorrelationMode::independent);
    Stream rng(SeedSpec{12, "indep"});
    const int n = 100000;
    double st = 0, ss = 0, sst = 0;
    for (int i = 0; i < n; ++i) {
        const Customer c = sample_customer(rng, p, 0.0);
        ss += c.service_req;
        st += c.patience;
        sst += c.service_req * c.patience;
    }
    EXPECT_NEAR(st / n, 0.5, 3 * 0.5 / std::sqrt(n));
    // Independence: E[ST] = E[S]E[T].
    EXPECT_NEAR(sst / n, (ss / n) * (st / n), 0.01);
}

TEST(Rng, SameSeedSameSequence) {
    const ModelParams p = make_params(10, 0.5, 0.7);
    const SeedSpec spec{42, "exp", 10, 3, "customers"};
    Stream a(spec), b(spec);
    for (int i = 0; i < 1000; ++i) {
        const Customer x = sample_customer(a, p, i);
        const Customer y = sample_customer(b, p, i);
        ASSERT_EQ(x.service_req, y.service_req);
        ASSERT_EQ(x.patience, y.patience);
    }
}

TEST(Rng, DistinctKeysDiffer) {
    const SeedSpec base{42, "exp", 10, 0, "main"};
    std::set<std::uint64_t> keys = {base.key(), base.with_replication(1).key(), base.with_n(11).key(),
                                    base.with_purpose("other").key(), SeedSpec{43, "exp", 10, 0, "main"}.key()};
    EXPECT_EQ(keys.size(), 5u);
    Stream a(base), b(base.with_replication(1));
    int equal = 0;
    for (int i = 0; i < 100; ++i) equal += a.next() == b.next();
    EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformOpenNeverHitsEndpoints) {
    Stream rng(5);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform_open();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_NEAR(sum / 200000, 0.5, 0.005);
}

TEST(Rng, NormalMoments) {
    Stream rng(9);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.015);
}
