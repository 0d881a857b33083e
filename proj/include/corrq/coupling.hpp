#pragma once

// Sample-path couplings between systems driven from one event loop.
//
//   pc_pc:          two correlated-patience systems with a shared arrival
//                   stream and shared S; system 1 also gets an extra stream.
//                   Every shared customer must stay at least as long in
//                   system 1, hence X1 >= X2.
//   pc_infserver:   the correlated system against an infinite-server queue
//                   that holds every customer for T + S; X_pc <= X_inf.
//   pc_erlangA_stat: stationary X of the Erlang-A twin is stochastically
//                   below X of the correlated system, checked with DKW bands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corrq/engine.hpp"
#include "corrq/model.hpp"
#include "corrq/stationary.hpp"
#include "corrq/stats.hpp"

namespace corrq {

enum class CouplingKind { pc_pc, pc_infserver, pc_erlangA_stat };

inline std::string to_string(CouplingKind k) {
    switch (k) {
        case CouplingKind::pc_pc: return "pc_pc";
        case CouplingKind::pc_infserver: return "pc_infserver";
        case CouplingKind::pc_erlangA_stat: return "pc_erlangA_stat";
    }
    return "?";
}

inline CouplingKind parse_coupling_kind(const std::string& s) {
    if (s == "pc_pc") return CouplingKind::pc_pc;
    if (s == "pc_infserver") return CouplingKind::pc_infserver;
    if (s == "pc_erlangA_stat" || s == "pc_erlanga_stat") return CouplingKind::pc_erlangA_stat;
    throw ConfigError("unknown coupling kind '" + s + "'");
}

inline nlohmann::json to_json(const ModelParams& p) {
    return {{"n", p.n}, {"beta", p.beta}, {"theta", p.theta}, {"lambda", p.lambda}, {"mu", p.mu},
            {"correlation_mode", std::string(to_string(p.mode))}};
}

struct CouplingReport {
    CouplingKind kind = CouplingKind::pc_pc;
    nlohmann::json params;
    std::uint64_t customers_checked = 0;
    std::uint64_t epochs_checked = 0;
    std::uint64_t violations = 0;
    std::string first_violation;
    double max_violation_margin = 0.0;
    // Statistical kind only.
    double ci_alpha = 0.0;
    double ci_slack = 0.0;
    double max_cdf_gap = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j = {{"kind", to_string(kind)},
                            {"params", params},
                            {"customers_checked", customers_checked},
                            {"epochs_checked", epochs_checked},
                            {"violations", violations},
                            {"max_violation_margin", max_violation_margin},
                            {"ci_alpha", ci_alpha},
                            {"seed", seed}};
        if (!first_violation.empty()) j["first_violation"] = first_violation;
        if (kind == CouplingKind::pc_erlangA_stat) {
            j["ci_slack"] = ci_slack;
            j["max_cdf_gap"] = max_cdf_gap;
        }
        return j;
    }
};

/// Infinite-server queue: every customer leaves at its own fixed time.
class InfiniteServerQueue {
public:
    void arrive(double departure_time) { pending_.push(departure_time); }
    [[nodiscard]] double next_event_time() const { return pending_.empty() ? kInf : pending_.top(); }
    void step() { pending_.pop(); }
    void advance_to(double t) {
        while (!pending_.empty() && pending_.top() <= t) pending_.pop();
    }
    [[nodiscard]] long X() const { return static_cast<long>(pending_.size()); }

private:
    std::priority_queue<double, std::vector<double>, std::greater<>> pending_;
};

namespace detail {
inline constexpr std::uint64_t kExtraBit = std::uint64_t{1} << 63;
}

/// Builds the shared-stream coupling of two correlated systems and checks
/// the per-customer sojourn ordering and X1 >= X2 at every epoch. Arrivals
/// stop at `horizon` or after `max_shared_customers` shared arrivals; both
/// systems then drain so every shared customer is compared.
inline CouplingReport couple_pc_pc(const ModelParams& p1, const ModelParams& p2, double horizon, const SeedSpec& seed,
                                   std::uint64_t max_shared_customers = std::numeric_limits<std::uint64_t>::max()) {
    require(p1.n == p2.n, "both systems need the same number of servers");
    require(p1.mode != CorrelationMode::independent && p2.mode != CorrelationMode::independent,
            "pc_pc coupling is defined for correlated (or infinite) patience only");
    require(horizon > 0.0, "horizon must be > 0");
    const double th1 = p1.abandonment_rate();
    const double th2 = p2.abandonment_rate();
    require(p1.lambda >= p2.lambda, "pc_pc coupling requires lambda1 >= lambda2");
    require(th1 >= 0.0 && th1 < 1.0, "pc_pc coupling requires 0 <= theta1 < 1");
    require(th2 >= th1 / (1.0 - th1), "pc_pc coupling requires theta2 >= theta1 / (1 - theta1)");
    require(th1 > 0.0 || p1.lambda < p1.n, "theta1 = 0 (Erlang-C) requires lambda1 < n");

    CouplingReport rep;
    rep.kind = CouplingKind::pc_pc;
    rep.params = {{"system1", to_json(p1)}, {"system2", to_json(p2)}, {"horizon", horizon}};
    rep.seed = seed.master_seed;

    ServiceSystem s1(p1), s2(p2);
    std::vector<double> exit1, exit2;
    auto compare = [&](std::uint64_t k) {
        if (std::isnan(exit1[k]) || std::isnan(exit2[k])) return;
        ++rep.customers_checked;
        if (exit1[k] < exit2[k]) {
            if (rep.violations++ == 0) {
                std::ostringstream os;
                os << "customer " << k << ": exit1=" << exit1[k] << " < exit2=" << exit2[k];
                rep.first_violation = os.str();
            }
            rep.max_violation_margin = std::max(rep.max_violation_margin, exit2[k] - exit1[k]);
        }
    };
    s1.set_exit_observer([&](const Customer& c, double t, ExitKind) {
        if (c.id & detail::kExtraBit) return;
        exit1[c.id] = t;
        compare(c.id);
    });
    s2.set_exit_observer([&](const Customer& c, double t, ExitKind) {
        exit2[c.id] = t;
        compare(c.id);
    });

    Stream shared_arrivals(seed.with_purpose("arrivals"));
    Stream shared_service(seed.with_purpose("customers"));
    Stream extra_arrivals(seed.with_purpose("extra_arrivals"));
    Stream extra_service(seed.with_purpose("extra_customers"));
    const double extra_rate = p1.lambda - p2.lambda;
    double next_shared = shared_arrivals.exponential(p2.lambda);
    double next_extra = extra_rate > 0.0 ? extra_arrivals.exponential(extra_rate) : kInf;
    std::uint64_t shared = 0, extra = 0;

    while (true) {
        if (next_shared > horizon || shared >= max_shared_customers) next_shared = kInf;
        if (next_extra > horizon || shared >= max_shared_customers) next_extra = kInf;
        const double t_int = std::min(s1.next_event_time(), s2.next_event_time());
        const double t_arr = std::min(next_shared, next_extra);
        const double t = std::min(t_int, t_arr);
        if (t == kInf) break;  // arrivals closed and both systems drained
        if (t_int <= t_arr) {
            while (s1.next_event_time() <= t) s1.step();
            while (s2.next_event_time() <= t) s2.step();
        } else if (next_shared <= next_extra) {
            s1.advance_to(t);
            s2.advance_to(t);
            const double s = shared_service.exponential(1.0);
            exit1.push_back(std::numeric_limits<double>::quiet_NaN());
            exit2.push_back(std::numeric_limits<double>::quiet_NaN());
            s1.arrive(customer_with_service(p1, t, s, nullptr, shared));
            s2.arrive(customer_with_service(p2, t, s, nullptr, shared));
            ++shared;
            next_shared = t + shared_arrivals.exponential(p2.lambda);
        } else {
            s1.advance_to(t);
            const double s = extra_service.exponential(1.0);
            s1.arrive(customer_with_service(p1, t, s, nullptr, detail::kExtraBit | extra++));
            next_extra = t + extra_arrivals.exponential(extra_rate);
        }
        // Only check once every event at this instant has been processed.
        if (std::min({s1.next_event_time(), s2.next_event_time(), next_shared, next_extra}) > t) {
            ++rep.epochs_checked;
            if (s1.X() < s2.X()) {
                if (rep.violations++ == 0) {
                    std::ostringstream os;
                    os << "t=" << t << ": X1=" << s1.X() << " < X2=" << s2.X();
                    rep.first_violation = os.str();
                }
                rep.max_violation_margin = std::max(rep.max_violation_margin, static_cast<double>(s2.X() - s1.X()));
            }
        }
    }
    rep.params["shared_customers"] = shared;
    rep.params["extra_customers"] = extra;
    const auto inv = s1.invariants().total() + s2.invariants().total();
    rep.params["invariant_violations"] = inv;
    return rep;
}

/// Correlated system against the infinite-server queue holding each
/// customer for T + S. Checks X_pc <= X_inf at every epoch and that each
/// customer leaves the correlated system no later than its twin. Arrivals
/// stop at `horizon`; both systems then drain.
inline CouplingReport couple_pc_infserver(const ModelParams& p, double horizon, const SeedSpec& seed) {
    require(p.mode == CorrelationMode::perfect, "pc_infserver coupling requires perfect correlation");
    require(horizon > 0.0, "horizon must be > 0");
    CouplingReport rep;
    rep.kind = CouplingKind::pc_infserver;
    rep.params = {{"system", to_json(p)}, {"horizon", horizon}};
    rep.seed = seed.master_seed;

    ServiceSystem pc(p);
    InfiniteServerQueue inf;
    pc.set_exit_observer([&](const Customer& c, double t, ExitKind) {
        ++rep.customers_checked;
        // Twin leaves at (arrival + T) + S, which dominates both a served
        // exit (start + S, start < arrival + T) and an abandonment in floating point.
        const double twin = c.abandon_deadline + c.service_req;
        if (t > twin) {
            if (rep.violations++ == 0) {
                std::ostringstream os;
                os << "customer " << c.id << " left at " << t << " after its twin (" << twin << ")";
                rep.first_violation = os.str();
            }
            rep.max_violation_margin = std::max(rep.max_violation_margin, t - twin);
        }
    });

    PoissonSource source(p, seed);
    auto next_arrival = [&] { return source.next_time() <= horizon ? source.next_time() : kInf; };
    while (true) {
        const double t = std::min({pc.next_event_time(), inf.next_event_time(), next_arrival()});
        if (t == kInf) break;  // arrivals closed and both systems drained
        if (pc.next_event_time() <= t || inf.next_event_time() <= t) {
            while (pc.next_event_time() <= t) pc.step();
            inf.advance_to(t);
        } else {
            pc.advance_to(t);
            Customer c = source.pop(pc.next_customer_id());
            inf.arrive(c.abandon_deadline + c.service_req);
            pc.arrive(std::move(c));
        }
        if (std::min({pc.next_event_time(), inf.next_event_time(), next_arrival()}) > t) {
            ++rep.epochs_checked;
            if (pc.X() > inf.X()) {
                if (rep.violations++ == 0) {
                    std::ostringstream os;
                    os << "t=" << t << ": X_pc=" << pc.X() << " > X_inf=" << inf.X();
                    rep.first_violation = os.str();
                }
                rep.max_violation_margin = std::max(rep.max_violation_margin, static_cast<double>(pc.X() - inf.X()));
            }
        }
    }
    rep.params["invariant_violations"] = pc.invariants().total();
    return rep;
}

/// Minimum per-system sample count for which a DKW band at alpha/2 is
/// narrower than 1/2.
inline std::size_t min_samples_for_dkw(double alpha) {
    return static_cast<std::size_t>(std::ceil(2.0 * std::log(4.0 / alpha)));
}

/// One-sided dominance check F_A(x) >= F_pc(x) on two sample sets. The
/// slack is the sum of the two DKW half-widths at alpha/2 each, so the
/// bands hold jointly with probability >= 1 - alpha.
inline CouplingReport dominance_report(std::span<const double> pc_samples, std::span<const double> a_samples,
                                       double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    const std::size_t need = min_samples_for_dkw(alpha);
    if (pc_samples.size() < need || a_samples.size() < need)
        throw ConfigError("insufficient samples for the requested confidence (need >= " + std::to_string(need) +
                          " per system)");
    std::vector<double> pc(pc_samples.begin(), pc_samples.end()), a(a_samples.begin(), a_samples.end());
    std::sort(pc.begin(), pc.end());
    std::sort(a.begin(), a.end());
    CouplingReport rep;
    rep.kind = CouplingKind::pc_erlangA_stat;
    rep.ci_alpha = alpha;
    rep.ci_slack = dkw_epsilon(pc.size(), alpha / 2.0) + dkw_epsilon(a.size(), alpha / 2.0);
    double gap = -1.0;
    for (const auto* v : {&pc, &a})
        for (double x : *v) gap = std::max(gap, ecdf_sorted(pc, x) - ecdf_sorted(a, x));
    rep.max_cdf_gap = gap;
    rep.max_violation_margin = std::max(0.0, gap);
    rep.epochs_checked = pc.size() + a.size();
    rep.violations = gap > rep.ci_slack ? 1 : 0;
    if (rep.violations) rep.first_violation = "F_pc exceeds F_A by more than the DKW slack";
    return rep;
}

/// Stationary X of the correlated system against its Erlang-A twin (same
/// n, lambda, theta; independent patience), run on separate streams.
inline CouplingReport compare_pc_erlangA_stationary(const ModelParams& p, const EstimatorConfig& cfg,
                                                    const SeedSpec& seed, double alpha = 0.01) {
    require(p.mode == CorrelationMode::perfect, "first system must have perfect correlation");
    ModelParams twin = p;
    twin.mode = CorrelationMode::independent;
    require(cfg.samples >= min_samples_for_dkw(alpha), "insufficient samples for the requested confidence");
    const StationaryRun pc = stationary_run(p, cfg, seed.with_purpose("pc_stationary"));
    const StationaryRun ea = stationary_run(twin, cfg, seed.with_purpose("erlang_a_stationary"));
    CouplingReport rep = dominance_report(pc.X, ea.X, alpha);
    rep.params = {{"system", to_json(p)},
                  {"twin", to_json(twin)},
                  {"samples", cfg.samples},
                  {"burn_in", pc.burn_in},
                  {"spacing", pc.spacing},
                  {"invariant_violations", pc.invariants.total() + ea.invariants.total()}};
    rep.seed = seed.master_seed;
    return rep;
}

}  // namespace corrq
