#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "corrq/simulate.hpp"
#include "corrq/stats.hpp"

namespace corrq {

enum class Observable { X, Q, L, w_v };

inline std::string to_string(Observable o) {
    switch (o) {
        case Observable::X: return "X";
        case Observable::Q: return "Q";
        case Observable::L: return "L";
        case Observable::w_v: return "w_v";
    }
    return "?";
}

inline Observable parse_observable(const std::string& s) {
    if (s == "X") return Observable::X;
    if (s == "Q") return Observable::Q;
    if (s == "L") return Observable::L;
    if (s == "w_v") return Observable::w_v;
    throw ConfigError("unknown observable '" + s + "'");
}

/// Burn-in defaults to burn_in_multiplier * n^{1/4}; spacing to n^{1/4}
/// (one LOF time unit). Both are in real time.
struct EstimatorConfig {
    std::size_t samples = 1000;
    std::optional<double> burn_in;
    std::optional<double> spacing;
    double burn_in_multiplier = 20.0;
    std::size_t batches = 20;
    bool offered_wait = false;

    [[nodiscard]] double burn_in_for(int n) const {
        return burn_in ? *burn_in : burn_in_multiplier * lof_time_scale(n);
    }
    [[nodiscard]] double spacing_for(int n) const { return spacing ? *spacing : lof_time_scale(n); }

    void validate() const {
        require(samples > 0, "sample count must be > 0");
        require(!spacing || *spacing > 0.0, "spacing must be > 0");
        require(!burn_in || *burn_in >= 0.0, "burn-in must be >= 0");
        require(burn_in_multiplier >= 0.0, "burn-in multiplier must be >= 0");
        require(batches >= 2 && batches <= samples, "batches must be in [2, samples]");
    }
};

/// All observables recorded on one stationary run from an empty start.
struct StationaryRun {
    ModelParams params;
    double burn_in = 0.0;
    double spacing = 0.0;
    std::vector<double> X, Q, L, w_v;
    EventCounts counts;
    InvariantReport invariants;
    bool conserved = true;

    [[nodiscard]] const std::vector<double>& series(Observable o) const {
        switch (o) {
            case Observable::X: return X;
            case Observable::Q: return Q;
            case Observable::L: return L;
            case Observable::w_v:
                require(!w_v.empty(), "offered wait was not recorded (set offered_wait)");
                return w_v;
        }
        return X;
    }
};

struct StationarySample {
    Observable tag = Observable::X;
    std::vector<double> samples;
    double burn_in = 0.0;
    double spacing = 0.0;
    int n = 1;
    ModelParams params;
    double std_error = 0.0;  // batch means
};

inline StationaryRun stationary_run(const ModelParams& params, const EstimatorConfig& cfg, const SeedSpec& seed) {
    cfg.validate();
    const double burn = cfg.burn_in_for(params.n);
    const double gap = cfg.spacing_for(params.n);
    std::vector<double> grid(cfg.samples);
    for (std::size_t i = 0; i < cfg.samples; ++i) grid[i] = burn + static_cast<double>(i) * gap;
    const double horizon = grid.back() > 0.0 ? grid.back() : gap;

    ServiceSystem sys(params);
    PoissonSource source(params, seed);
    StationaryRun run;
    run.params = params;
    run.burn_in = burn;
    run.spacing = gap;
    run.X.reserve(cfg.samples);
    run.Q.reserve(cfg.samples);
    run.L.reserve(cfg.samples);
    drive(sys, source, horizon, grid, [&](const ServiceSystem& s) {
        run.X.push_back(static_cast<double>(s.X()));
        run.Q.push_back(static_cast<double>(s.Q()));
        run.L.push_back(s.workload());
        if (cfg.offered_wait) run.w_v.push_back(s.offered_wait());
    });
    run.counts = sys.counts();
    run.invariants = sys.invariants();
    run.conserved = sys.conserved();
    return run;
}

inline StationarySample extract(const StationaryRun& run, Observable tag, std::size_t batches = 20) {
    StationarySample out;
    out.tag = tag;
    out.samples = run.series(tag);
    out.burn_in = run.burn_in;
    out.spacing = run.spacing;
    out.n = run.params.n;
    out.params = run.params;
    out.std_error = out.samples.size() >= batches && batches >= 2 ? batch_means(out.samples, batches).std_error : 0.0;
    return out;
}

inline StationarySample stationary_sample(const ModelParams& params, const EstimatorConfig& cfg,
                                          const SeedSpec& seed, Observable tag = Observable::X) {
    EstimatorConfig c = cfg;
    if (tag == Observable::w_v) c.offered_wait = true;
    return extract(stationary_run(params, c, seed), tag, c.batches);
}

inline void write_samples_csv(std::ostream& out, std::span<const double> samples) {
    out << "sample_index,value\n";
    for (std::size_t i = 0; i < samples.size(); ++i) out << i << ',' << fmt17(samples[i]) << '\n';
}

/// Regenerative estimate of the time-average of X using cycles that start
/// whenever an arrival finds the system empty. Only practical at small n.
struct RegenerativeEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t cycles = 0;
};

inline RegenerativeEstimate regenerative_mean_X(const ModelParams& params, std::size_t cycles, const SeedSpec& seed) {
    require(cycles >= 2, "need at least 2 regeneration cycles");
    ServiceSystem sys(params);
    PoissonSource source(params, seed);
    std::vector<double> area, length;
    area.reserve(cycles);
    length.reserve(cycles);
    double cycle_start = -1.0, cycle_area = 0.0, last = 0.0;
    auto accumulate_to = [&](double t) {
        if (cycle_start >= 0.0) cycle_area += static_cast<double>(sys.X()) * (t - last);
        last = t;
    };
    while (area.size() < cycles) {
        const double ta = source.next_time();
        const double te = sys.next_event_time();
        if (te < ta) {
            accumulate_to(te);
            sys.step();
            continue;
        }
        accumulate_to(ta);
        sys.advance_to(ta);
        if (sys.X() == 0) {
            if (cycle_start >= 0.0) {
                area.push_back(cycle_area);
                length.push_back(ta - cycle_start);
            }
            cycle_start = ta;
            cycle_area = 0.0;
        }
        sys.arrive(source.pop(sys.next_customer_id()));
    }
    // Ratio estimator with delta-method standard error.
    const double ma = mean(area), ml = mean(length);
    const double r = ma / ml;
    double s = 0.0;
    for (std::size_t i = 0; i < cycles; ++i) {
        const double d = area[i] - r * length[i];
        s += d * d;
    }
    s /= static_cast<double>(cycles - 1);
    return {r, std::sqrt(s / static_cast<double>(cycles)) / ml, cycles};
}

}  // namespace corrq
