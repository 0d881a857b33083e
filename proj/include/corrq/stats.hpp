#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "corrq/error.hpp"

namespace corrq {

inline double mean(std::span<const double> xs) {
    require(!xs.empty(), "mean of empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
    require(xs.size() >= 2, "variance needs at least 2 values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

/// Estimate of a mean with a batch-means standard error.
struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t batches = 0;

    [[nodiscard]] double ci_low(double z = 1.96) const { return mean - z * std_error; }
    [[nodiscard]] double ci_high(double z = 1.96) const { return mean + z * std_error; }
};

/// Splits the series into `batches` contiguous batches (trailing remainder
/// dropped) and uses the spread of batch means.
inline MeanEstimate batch_means(std::span<const double> xs, std::size_t batches = 20) {
    require(batches >= 2, "batch means needs at least 2 batches");
    require(xs.size() >= batches, "fewer samples than batches");
    const std::size_t size = xs.size() / batches;
    std::vector<double> bm(batches);
    for (std::size_t b = 0; b < batches; ++b) bm[b] = mean(xs.subspan(b * size, size));
    return {mean(xs), std::sqrt(sample_variance(bm) / static_cast<double>(batches)), batches};
}

/// Mean with the ordinary iid standard error (for independent replications).
inline MeanEstimate iid_mean(std::span<const double> xs) {
    require(xs.size() >= 2, "need at least 2 replications");
    return {mean(xs), std::sqrt(sample_variance(xs) / static_cast<double>(xs.size())), xs.size()};
}

/// One-sample Kolmogorov-Smirnov statistic sup_x |F_N(x) - F(x)|.
inline double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
    require(!samples.empty(), "KS statistic of empty sample");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Asymptotic KS critical value sqrt(-ln(alpha/2)/2)/sqrt(N).
inline double ks_critical(std::size_t n, double alpha = 0.05) {
    return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width: P(sup|F_N - F| > eps) <= alpha.
inline double dkw_epsilon(std::size_t n, double alpha) {
    require(n > 0, "DKW band needs samples");
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

/// Empirical CDF evaluated at x (sorted input).
inline double ecdf_sorted(std::span<const double> sorted, double x) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
           static_cast<double>(sorted.size());
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;      // NaN with only two points
    double intercept_se = 0.0;  // NaN with only two points
    double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit slope_fit(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "slope_fit: x and y sizes differ");
    require(x.size() >= 2, "slope_fit needs at least 2 points");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "slope_fit: degenerate design (all x equal)");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        ssr += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    const auto m = static_cast<double>(x.size());
    if (x.size() > 2) {
        const double s2 = ssr / (m - 2.0);
        f.slope_se = std::sqrt(s2 / sxx);
        f.intercept_se = std::sqrt(s2 * (1.0 / m + mx * mx / sxx));
    } else {
        f.slope_se = f.intercept_se = std::numeric_limits<double>::quiet_NaN();
    }
    return f;
}

/// OLS of log y on log x.
inline LineFit loglog_slope_fit(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "loglog_slope_fit: x and y sizes differ");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "loglog_slope_fit needs positive values");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return slope_fit(lx, ly);
}

}  // namespace corrq
