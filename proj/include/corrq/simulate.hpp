#pragma once

#include <algorithm>
#include <ostream>
#include <span>
#include <vector>

#include "corrq/csv.hpp"
#include "corrq/engine.hpp"
#include "corrq/model.hpp"
#include "corrq/rng.hpp"
#include "corrq/scaling.hpp"

namespace corrq {

struct TraceRecord {
    double t = 0.0;
    long X = 0;
    long Q = 0;
    long Z1 = 0;
    long Z2 = 0;
    double L = 0.0;    // workload
    double w = 0.0;    // head-of-line elapsed wait
    double w_v = 0.0;  // offered wait
};

inline TraceRecord snapshot(const ServiceSystem& sys, bool with_offered_wait = true) {
    return {sys.clock(), sys.X(), sys.Q(), sys.Z1(), sys.Z2(), sys.workload(), sys.head_of_line_wait(),
            with_offered_wait ? sys.offered_wait() : 0.0};
}

struct SimulationResult {
    std::vector<TraceRecord> trace;
    EventCounts counts;
    InvariantReport invariants;
    bool conserved = true;

    [[nodiscard]] RawPath x_path() const {
        RawPath p;
        for (const auto& r : trace) {
            p.times.push_back(r.t);
            p.values.push_back(static_cast<double>(r.X));
        }
        return p;
    }
};

struct SimOptions {
    bool offered_wait = true;
    bool deep_checks = false;
};

/// Poisson arrivals of rate lambda with customers drawn from their own
/// substream ("arrivals" and "customers" purposes of `seed`).
class PoissonSource {
public:
    PoissonSource(const ModelParams& p, const SeedSpec& seed)
        : params_(p),
          arrivals_(seed.with_purpose("arrivals")),
          customers_(seed.with_purpose("customers")),
          next_(arrivals_.exponential(p.lambda)) {}

    [[nodiscard]] double next_time() const noexcept { return next_; }

    Customer pop(std::uint64_t id) {
        Customer c = sample_customer(customers_, params_, next_, id);
        next_ += arrivals_.exponential(params_.lambda);
        return c;
    }

private:
    ModelParams params_;
    Stream arrivals_;
    Stream customers_;
    double next_;
};

/// Drives `sys` with `source` up to `horizon`, calling `on_grid(sys)` with
/// the state at each grid time (events at exactly that time included).
template <class Source, class OnGrid>
void drive(ServiceSystem& sys, Source& source, double horizon, std::span<const double> grid, OnGrid&& on_grid) {
    std::size_t k = 0;
    while (true) {
        const double ta = source.next_time();
        const double tg = k < grid.size() ? grid[k] : kInf;
        if (ta <= tg && ta <= horizon) {
            sys.advance_to(ta);
            sys.arrive(source.pop(sys.next_customer_id()));
        } else if (tg <= horizon) {
            sys.advance_to(tg);
            on_grid(sys);
            ++k;
        } else {
            break;
        }
    }
    sys.advance_to(horizon);
}

inline void validate_grid(std::span<const double> grid, double horizon) {
    require(horizon > 0.0 && std::isfinite(horizon), "horizon must be > 0");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] >= 0.0 && grid[i] <= horizon, "record grid must lie in [0, horizon]");
        require(i == 0 || grid[i] > grid[i - 1], "record grid must be strictly increasing");
    }
}

/// One trace run with Poisson arrivals.
inline SimulationResult simulate(const ModelParams& params, const InitSpec& init, double horizon,
                                 const SeedSpec& seed, std::span<const double> grid,
                                 const SimOptions& opts = {}) {
    validate_grid(grid, horizon);
    ServiceSystem sys(params, opts.deep_checks);
    Stream init_rng(seed.with_purpose("init"));
    sys.initialize(init, init_rng);
    PoissonSource source(params, seed);
    SimulationResult out;
    out.trace.reserve(grid.size());
    drive(sys, source, horizon, grid,
          [&](const ServiceSystem& s) { out.trace.push_back(snapshot(s, opts.offered_wait)); });
    out.counts = sys.counts();
    out.invariants = sys.invariants();
    out.conserved = sys.conserved();
    return out;
}

/// Evenly spaced grid 0, dt, 2dt, ... up to and including horizon.
inline std::vector<double> uniform_grid(double horizon, double dt) {
    require(dt > 0.0, "grid spacing must be > 0");
    std::vector<double> g;
    const auto steps = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
    g.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) g.push_back(std::min(horizon, static_cast<double>(i) * dt));
    return g;
}

inline void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) {
    out << "t,X,Q,Z1,Z2,L,w,w_v\n";
    for (const auto& r : trace) {
        out << fmt17(r.t) << ',' << r.X << ',' << r.Q << ',' << r.Z1 << ',' << r.Z2 << ',' << fmt17(r.L) << ','
            << fmt17(r.w) << ',' << fmt17(r.w_v) << '\n';
    }
}

}  // namespace corrq
