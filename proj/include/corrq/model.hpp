#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "corrq/error.hpp"
#include "corrq/rng.hpp"

namespace corrq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// How a customer's patience relates to its service requirement.
///   perfect:     T = S / theta
///   independent: T ~ Exp(theta), independent of S (Erlang-A)
///   none:        T = +inf (Erlang-C)
enum class CorrelationMode { perfect, independent, none };

inline std::string_view to_string(CorrelationMode m) {
    switch (m) {
        case CorrelationMode::perfect: return "perfect";
        case CorrelationMode::independent: return "independent";
        case CorrelationMode::none: return "none";
    }
    return "?";
}

inline CorrelationMode parse_mode(std::string_view s) {
    if (s == "perfect" || s == "pc") return CorrelationMode::perfect;
    if (s == "independent" || s == "erlang_a") return CorrelationMode::independent;
    if (s == "none" || s == "erlang_c") return CorrelationMode::none;
    throw ConfigError("unknown correlation mode '" + std::string(s) + "'");
}

/// Primitive configuration of the n-th system. Time is measured in mean
/// service times, so mu is always 1.
struct ModelParams {
    int n = 1;
    double beta = 0.0;
    double theta = 1.0;
    double lambda = 1.0;
    double mu = 1.0;
    CorrelationMode mode = CorrelationMode::perfect;

    /// Rate at which queued customers abandon; zero when patience is infinite.
    [[nodiscard]] double abandonment_rate() const noexcept {
        return mode == CorrelationMode::none ? 0.0 : theta;
    }
};

/// Square-root staffing: lambda = n - beta * sqrt(n).
inline ModelParams make_params(int n, double beta, double theta,
                               CorrelationMode mode = CorrelationMode::perfect) {
    require(n >= 1, "n must be >= 1");
    require(std::isfinite(beta), "beta must be finite");
    require(theta > 0.0 && std::isfinite(theta), "theta must be > 0");
    const double root = std::sqrt(static_cast<double>(n));
    if (!(beta < root))
        throw StaffingInfeasible("staffing infeasible: beta must be < sqrt(n) so that lambda > 0");
    ModelParams p;
    p.n = n;
    p.beta = beta;
    p.theta = theta;
    p.lambda = static_cast<double>(n) - beta * root;
    p.mode = mode;
    if (!(p.lambda > 0.0))
        throw StaffingInfeasible("staffing infeasible: lambda = n - beta*sqrt(n) is not positive");
    return p;
}

/// Same as make_params but given the arrival rate directly; beta is derived.
inline ModelParams params_from_rate(int n, double lambda, double theta,
                                    CorrelationMode mode = CorrelationMode::perfect) {
    require(n >= 1, "n must be >= 1");
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
    require(theta > 0.0 && std::isfinite(theta), "theta must be > 0");
    ModelParams p;
    p.n = n;
    p.lambda = lambda;
    p.beta = (static_cast<double>(n) - lambda) / std::sqrt(static_cast<double>(n));
    p.theta = theta;
    p.mode = mode;
    return p;
}

struct Customer {
    std::uint64_t id = 0;
    double arrival_time = 0.0;
    double service_req = 0.0;  // S
    double patience = kInf;    // T
    double abandon_deadline = kInf;
    std::optional<double> service_start;
    std::optional<double> service_end;
};

/// Draws (S, T) for an arrival at `arrival_time`.
///
/// In perfect mode T is computed first as fl(S_raw / theta) and S is then
/// set to fl(T * theta), so theta * patience == service_req holds bit-exactly.
inline Customer sample_customer(Stream& rng, const ModelParams& p, double arrival_time,
                                std::uint64_t id = 0) {
    Customer c;
    c.id = id;
    c.arrival_time = arrival_time;
    const double s = rng.exponential(1.0);
    switch (p.mode) {
        case CorrelationMode::perfect:
            c.patience = s / p.theta;
            c.service_req = c.patience * p.theta;
            break;
        case CorrelationMode::independent:
            c.service_req = s;
            c.patience = rng.exponential(p.theta);
            break;
        case CorrelationMode::none:
            c.service_req = s;
            c.patience = kInf;
            break;
    }
    c.abandon_deadline = arrival_time + c.patience;
    return c;
}

/// Builds a customer from a given service requirement, deriving patience
/// from the correlation mode. S is kept verbatim (T = S / theta), so systems
/// sharing a customer see bit-identical service requirements. `independent`
/// mode needs an rng for T.
inline Customer customer_with_service(const ModelParams& p, double arrival_time, double service_req,
                                      Stream* patience_rng = nullptr, std::uint64_t id = 0) {
    Customer c;
    c.id = id;
    c.arrival_time = arrival_time;
    switch (p.mode) {
        case CorrelationMode::perfect:
            c.service_req = service_req;
            c.patience = service_req / p.theta;
            break;
        case CorrelationMode::independent:
            if (patience_rng == nullptr) throw ConfigError("independent mode needs a patience stream");
            c.service_req = service_req;
            c.patience = patience_rng->exponential(p.theta);
            break;
        case CorrelationMode::none:
            c.service_req = service_req;
            c.patience = kInf;
            break;
    }
    c.abandon_deadline = arrival_time + c.patience;
    return c;
}

}  // namespace corrq
