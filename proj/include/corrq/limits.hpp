#pragma once

// Limit objects: diffusion drifts, the stationary law of the Erlang-C
// diffusion, Euler-Maruyama paths, and the lower-order fluid ODE.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "corrq/error.hpp"
#include "corrq/rng.hpp"
#include "corrq/scaling.hpp"

namespace corrq {

/// Standard normal cdf. std::erfc is the libm implementation (correctly
/// rounded to within 1 ulp on glibc), which keeps the lower tail accurate.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Erlang-C diffusion drift (mu = 1).
inline double drift_mc(double x, double beta) { return x >= 0.0 ? -beta : -(beta + x); }

/// Erlang-A diffusion drift (mu = 1).
inline double drift_ma(double x, double beta, double theta) {
    return x >= 0.0 ? -(beta + theta * x) : -(beta + x);
}

/// Stationary law of the Erlang-C diffusion for beta > 0: exponential with
/// rate beta above 0, the N(-beta, 1) body truncated to (-inf, 0) below.
class HwStationaryLaw {
public:
    explicit HwStationaryLaw(double beta) : beta_(beta) {
        if (!(beta > 0.0)) throw ConfigError("stationary law requires beta > 0 (null or transient otherwise)");
        phi_beta_ = normal_cdf(beta);
        p_nonneg_ = 1.0 / (1.0 + std::sqrt(2.0 * std::numbers::pi) * beta * phi_beta_ * std::exp(0.5 * beta * beta));
    }

    [[nodiscard]] double beta() const noexcept { return beta_; }
    /// P(X >= 0).
    [[nodiscard]] double p_nonnegative() const noexcept { return p_nonneg_; }

    [[nodiscard]] double pdf(double x) const {
        if (x >= 0.0) return p_nonneg_ * beta_ * std::exp(-beta_ * x);
        return (1.0 - p_nonneg_) * normal_pdf(beta_ + x) / phi_beta_;
    }

    [[nodiscard]] double cdf(double x) const {
        if (x >= 0.0) return (1.0 - p_nonneg_) + p_nonneg_ * -std::expm1(-beta_ * x);
        return (1.0 - p_nonneg_) * normal_cdf(beta_ + x) / phi_beta_;
    }

    /// Branch by P(X >= 0); inverse-cdf exponential above, rejection from
    /// N(-beta, 1) below.
    double sample(Stream& rng) const {
        if (rng.uniform_open() < p_nonneg_) return rng.exponential(beta_);
        while (true) {
            const double y = rng.normal() - beta_;
            if (y < 0.0) return y;
        }
    }

private:
    double beta_;
    double phi_beta_ = 0.0;
    double p_nonneg_ = 0.0;
};

inline HwStationaryLaw hw_stationary(double beta) { return HwStationaryLaw(beta); }

enum class DriftKind { erlang_c, erlang_a };

struct DiffusionSpec {
    double beta = 1.0;
    double theta = 1.0;  // erlang_a only
    DriftKind drift_kind = DriftKind::erlang_c;
    double noise_coeff = std::numbers::sqrt2;

    [[nodiscard]] double drift(double x) const {
        return drift_kind == DriftKind::erlang_c ? drift_mc(x, beta) : drift_ma(x, beta, theta);
    }
};

struct Path {
    std::vector<double> t;
    std::vector<double> x;
};

/// Euler-Maruyama: x_{k+1} = x_k + m(x_k) dt + sqrt(2) sqrt(dt) N(0,1).
/// `zero_noise` drops the Brownian term (deterministic Euler).
inline Path sde_path(const DiffusionSpec& spec, double x0, double dt, double horizon, Stream& rng,
                     bool zero_noise = false) {
    require(dt > 0.0, "dt must be > 0");
    require(horizon >= dt, "horizon must be >= dt");
    require(spec.drift_kind == DriftKind::erlang_c || spec.theta > 0.0, "Erlang-A drift needs theta > 0");
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const double noise = spec.noise_coeff * std::sqrt(dt);
    Path p;
    p.t.reserve(steps + 1);
    p.x.reserve(steps + 1);
    double x = x0;
    p.t.push_back(0.0);
    p.x.push_back(x);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double dw = zero_noise ? 0.0 : rng.normal();
        x = x + spec.drift(x) * dt + noise * dw;
        p.t.push_back(static_cast<double>(k) * dt);
        p.x.push_back(x);
    }
    return p;
}

/// Lower-order fluid IVP x' = -beta - (theta^2/2) x^2, x(0) = x0, beta <= 0.
struct OdeSpec {
    double beta = 0.0;
    double theta = 1.0;
    double x0 = 0.0;

    void validate() const {
        require(beta <= 0.0, "fluid limit requires beta <= 0");
        require(theta > 0.0, "theta must be > 0");
        require(x0 >= 0.0, "x0 must be >= 0");
    }
    [[nodiscard]] double rhs(double x) const { return -beta - 0.5 * theta * theta * x * x; }
};

/// Globally attracting fixed point sqrt(-2 beta) / theta.
inline double x_star(double beta, double theta) {
    if (beta > 0.0) throw ConfigError("x* is defined only for beta <= 0");
    require(theta > 0.0, "theta must be > 0");
    return std::sqrt(-2.0 * beta) / theta;
}

/// Closed-form solution of the fluid IVP.
inline double lof_closed(double t, const OdeSpec& spec) {
    spec.validate();
    require(t >= 0.0, "t must be >= 0");
    const double th = spec.theta, x0 = spec.x0;
    if (spec.beta == 0.0) return 2.0 * x0 / (2.0 + th * th * x0 * t);
    const double r = std::sqrt(-2.0 * spec.beta);
    const double e = std::exp(-r * th * t);
    const double a = (r + th * x0) * (1.0 - e);
    return (r / th) * (a + 2.0 * th * x0 * e) / (a + 2.0 * r * e);
}

/// Classical RK4 on the fluid ODE, reported at `grid` (increasing, from 0).
/// Internal steps never exceed `max_step` (default 1e-4 of the grid span).
inline std::vector<double> lof_ode_solve(const OdeSpec& spec, std::span<const double> grid, double max_step = 0.0) {
    spec.validate();
    require(!grid.empty() && grid.front() >= 0.0, "grid must start at t >= 0");
    for (std::size_t i = 1; i < grid.size(); ++i) require(grid[i] > grid[i - 1], "grid must be increasing");
    const double span = grid.back();
    const double h_max = max_step > 0.0 ? max_step : (span > 0.0 ? 1e-4 * span : 1.0);
    std::vector<double> out;
    out.reserve(grid.size());
    double t = 0.0, x = spec.x0;
    auto f = [&](double v) { return spec.rhs(v); };
    for (double target : grid) {
        const double gap = target - t;
        if (gap > 0.0) {
            const auto steps = static_cast<std::size_t>(std::ceil(gap / h_max));
            const double h = gap / static_cast<double>(steps);
            for (std::size_t k = 0; k < steps; ++k) {
                const double k1 = f(x);
                const double k2 = f(x + 0.5 * h * k1);
                const double k3 = f(x + 0.5 * h * k2);
                const double k4 = f(x + h * k3);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            t = target;
        }
        out.push_back(x);
    }
    return out;
}

}  // namespace corrq
