#pragma once

// n-sweeps that set simulation estimates against the limit models.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "corrq/coupling.hpp"
#include "corrq/csv.hpp"
#include "corrq/limits.hpp"
#include "corrq/scaling.hpp"
#include "corrq/simulate.hpp"
#include "corrq/stationary.hpp"
#include "corrq/stats.hpp"

namespace corrq {

enum class ExperimentKind { diffusion_stationary, lof_fixed_point, lof_transient, diffusion_divergence, workload_scaling };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::diffusion_stationary: return "diffusion_stationary";
        case ExperimentKind::lof_fixed_point: return "lof_fixed_point";
        case ExperimentKind::lof_transient: return "lof_transient";
        case ExperimentKind::diffusion_divergence: return "diffusion_divergence";
        case ExperimentKind::workload_scaling: return "workload_scaling";
    }
    return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
    for (auto k : {ExperimentKind::diffusion_stationary, ExperimentKind::lof_fixed_point, ExperimentKind::lof_transient,
                   ExperimentKind::diffusion_divergence, ExperimentKind::workload_scaling})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

struct ExperimentPlan {
    ExperimentKind kind = ExperimentKind::diffusion_stationary;
    std::vector<int> n_values;
    double beta = 1.0;
    double theta = 1.0;
    CorrelationMode mode = CorrelationMode::perfect;
    std::size_t replications = 1;
    EstimatorConfig estimator;
    std::uint64_t seed_root = 1;
    std::string seed_label = "stationary";
    std::string output;  // directory; empty means no files
    int workers = 1;

    double threshold = 5.0;        // diffusion_divergence: M
    double x0 = 0.0;               // lof_transient: initial scaled queue
    double t_end = 3.0;            // lof_transient: scaled horizon
    std::size_t grid_points = 31;  // lof_transient

    void validate() const {
        require(!n_values.empty(), "plan needs at least one n");
        for (std::size_t i = 0; i < n_values.size(); ++i) {
            require(n_values[i] >= 1, "n values must be >= 1");
            require(i == 0 || n_values[i] > n_values[i - 1], "n values must be strictly increasing");
        }
        require(theta > 0.0, "theta must be > 0");
        require(replications >= 1, "replications must be >= 1");
        require(workers >= 1, "workers must be >= 1");
        estimator.validate();
        switch (kind) {
            case ExperimentKind::diffusion_stationary:
                require(beta > 0.0, "diffusion_stationary requires beta > 0");
                break;
            case ExperimentKind::lof_fixed_point:
                require(beta <= 0.0, "lof_fixed_point requires beta <= 0");
                break;
            case ExperimentKind::lof_transient:
                require(beta <= 0.0, "lof_transient requires beta <= 0");
                require(x0 >= 0.0, "x0 must be >= 0");
                require(t_end > 0.0, "t_end must be > 0");
                require(grid_points >= 2, "grid_points must be >= 2");
                require(replications >= 2, "lof_transient needs at least 2 replications");
                break;
            case ExperimentKind::diffusion_divergence:
                require(beta < 0.0 || (beta == 0.0 && theta < 1.0),
                        "diffusion_divergence requires beta < 0, or beta = 0 with theta < 1");
                require(threshold > 0.0, "threshold M must be > 0");
                break;
            case ExperimentKind::workload_scaling:
                break;
        }
        for (int n : n_values) make_params(n, beta, theta, mode);
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json est = {{"samples", estimator.samples},
                              {"burn_in_multiplier", estimator.burn_in_multiplier},
                              {"batches", estimator.batches}};
        if (estimator.burn_in) est["burn_in"] = *estimator.burn_in;
        if (estimator.spacing) est["spacing"] = *estimator.spacing;
        return {{"kind", to_string(kind)}, {"n", n_values},         {"beta", beta},
                {"theta", theta},          {"mode", std::string(to_string(mode))},
                {"replications", replications}, {"estimator", est}, {"seed", seed_root},
                {"seed_label", seed_label}, {"threshold", threshold}, {"x0", x0},
                {"t_end", t_end},          {"grid_points", grid_points}};
    }
};

/// Reads a plan from a JSON object (TOML is converted to JSON first).
inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw ConfigError(std::string("plan is missing required field '") + key + "'");
        return j.at(key);
    };
    try {
        ExperimentPlan p;
        p.kind = parse_experiment_kind(need("kind").get<std::string>());
        p.n_values = need("n").get<std::vector<int>>();
        p.beta = need("beta").get<double>();
        p.theta = need("theta").get<double>();
        if (j.contains("mode")) p.mode = parse_mode(j.at("mode").get<std::string>());
        p.replications =
            j.value("replications", std::size_t{p.kind == ExperimentKind::lof_transient ? 50u : 1u});
        p.seed_root = j.value("seed", std::uint64_t{1});
        p.seed_label = j.value("seed_label", std::string("stationary"));
        p.output = j.value("output", std::string());
        p.workers = j.value("workers", 1);
        p.threshold = j.value("threshold", 5.0);
        p.x0 = j.value("x0", 0.0);
        p.t_end = j.value("t_end", 3.0);
        p.grid_points = j.value("grid_points", std::size_t{31});
        if (j.contains("estimator")) {
            const auto& e = j.at("estimator");
            p.estimator.samples = e.value("samples", p.estimator.samples);
            p.estimator.burn_in_multiplier = e.value("burn_in_multiplier", p.estimator.burn_in_multiplier);
            p.estimator.batches = e.value("batches", p.estimator.batches);
            if (e.contains("burn_in")) p.estimator.burn_in = e.at("burn_in").get<double>();
            if (e.contains("spacing")) p.estimator.spacing = e.at("spacing").get<double>();
        }
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed plan: ") + e.what());
    }
}

struct FitPoint {
    int n = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t samples = 0;
    nlohmann::json detail = nlohmann::json::object();
};

struct FitReport {
    std::string kind;
    nlohmann::json params;
    std::vector<FitPoint> points;
    std::optional<LineFit> fit;
    std::string ci_method;
    nlohmann::json verdicts = nlohmann::json::object();
    InvariantReport invariants;
    bool conserved = true;

    [[nodiscard]] const FitPoint& at_n(int n) const {
        for (const auto& p : points)
            if (p.n == n) return p;
        throw ConfigError("no point for n = " + std::to_string(n));
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json per_n = nlohmann::json::array();
        for (const auto& p : points)
            per_n.push_back({{"n", p.n},
                             {"estimate", p.estimate},
                             {"std_error", p.std_error},
                             {"ci_low", p.ci_low},
                             {"ci_high", p.ci_high},
                             {"samples", p.samples},
                             {"detail", p.detail}});
        nlohmann::json j = {{"kind", kind},
                            {"params", params},
                            {"per_n", per_n},
                            {"ci_method", ci_method},
                            {"verdicts", verdicts},
                            {"invariant_violations", invariants.total()},
                            {"epochs_checked", invariants.epochs_checked},
                            {"conserved", conserved}};
        if (fit) {
            auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
            j["fit"] = {{"slope", fit->slope},
                        {"intercept", fit->intercept},
                        {"slope_se", num(fit->slope_se)},
                        {"intercept_se", num(fit->intercept_se)},
                        {"r2", fit->r2}};
        }
        return j;
    }
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results are
/// written by index, so the outcome is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    const auto threads = static_cast<std::size_t>(std::max(1, std::min<int>(workers, static_cast<int>(count))));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    pool.clear();
    if (error) std::rethrow_exception(error);
}

/// Pooled stationary samples of one system over its replications.
struct PooledRuns {
    ModelParams params;
    std::vector<StationaryRun> runs;
    InvariantReport invariants;
    bool conserved = true;

    [[nodiscard]] std::vector<double> pooled(Observable o) const {
        std::vector<double> out;
        for (const auto& r : runs) out.insert(out.end(), r.series(o).begin(), r.series(o).end());
        return out;
    }

    /// Mean of a transformed observable with batch means (one replication)
    /// or the iid spread of replication means (several).
    template <class F>
    [[nodiscard]] MeanEstimate estimate(Observable o, F&& transform, std::size_t batches) const {
        auto transformed = [&](const StationaryRun& r) {
            std::vector<double> v;
            v.reserve(r.series(o).size());
            for (double x : r.series(o)) v.push_back(transform(x));
            return v;
        };
        if (runs.size() == 1) return batch_means(transformed(runs.front()), batches);
        std::vector<double> means;
        for (const auto& r : runs) means.push_back(mean(transformed(r)));
        return iid_mean(means);
    }
};

/// Split-half agreement of a stationary series: z-score of the difference
/// of the two half means, each with its own batch-means error.
inline nlohmann::json split_half(std::span<const double> xs, std::size_t batches) {
    const std::size_t half = xs.size() / 2;
    const std::size_t b = std::max<std::size_t>(2, batches / 2);
    if (half < b) return nlohmann::json::object();
    const MeanEstimate a = batch_means(xs.first(half), b);
    const MeanEstimate c = batch_means(xs.subspan(half, half), b);
    const double se = std::sqrt(a.std_error * a.std_error + c.std_error * c.std_error);
    return {{"first_half_mean", a.mean}, {"second_half_mean", c.mean}, {"z", se > 0.0 ? (c.mean - a.mean) / se : 0.0}};
}

class Harness {
public:
    explicit Harness(int workers = 1) : workers_(workers) {}

    /// Stationary runs for every n of the plan; runs are cached by
    /// (params, estimator, seed) so several experiments can share them.
    std::vector<const PooledRuns*> stationary(const ExperimentPlan& plan) {
        std::vector<std::pair<std::size_t, std::size_t>> todo;  // (n index, replication)
        std::vector<std::string> keys;
        for (std::size_t i = 0; i < plan.n_values.size(); ++i) {
            keys.push_back(cache_key(plan, plan.n_values[i]));
            if (!cache_.contains(keys.back()))
                for (std::size_t r = 0; r < plan.replications; ++r) todo.emplace_back(i, r);
        }
        std::vector<StationaryRun> results(todo.size());
        parallel_for(todo.size(), std::max(workers_, plan.workers), [&](std::size_t k) {
            const auto [i, r] = todo[k];
            const int n = plan.n_values[i];
            const ModelParams p = make_params(n, plan.beta, plan.theta, plan.mode);
            results[k] = stationary_run(p, plan.estimator, seed_for(plan, n, r));
        });
        for (std::size_t k = 0; k < todo.size(); ++k) {
            const auto i = todo[k].first;
            PooledRuns& pr = cache_[keys[i]];
            pr.params = results[k].params;
            pr.invariants += results[k].invariants;
            pr.conserved = pr.conserved && results[k].conserved;
            pr.runs.push_back(std::move(results[k]));
        }
        std::vector<const PooledRuns*> out;
        for (const auto& k : keys) out.push_back(&cache_.at(k));
        return out;
    }

    FitReport run(const ExperimentPlan& plan) {
        plan.validate();
        switch (plan.kind) {
            case ExperimentKind::diffusion_stationary: return run_diffusion_stationary(plan);
            case ExperimentKind::lof_fixed_point: return run_lof_fixed_point(plan);
            case ExperimentKind::lof_transient: return run_lof_transient(plan);
            case ExperimentKind::diffusion_divergence: return run_diffusion_divergence(plan);
            case ExperimentKind::workload_scaling: return run_workload_scaling(plan);
        }
        throw ConfigError("unknown experiment kind");
    }

    /// KS distance of (X - n)/sqrt(n) to the Erlang-C diffusion's stationary law.
    FitReport run_diffusion_stationary(const ExperimentPlan& plan) {
        expect_kind(plan, ExperimentKind::diffusion_stationary);
        plan.validate();
        const HwStationaryLaw law(plan.beta);
        FitReport rep = start_report(plan, "one-sample KS; critical value at alpha=0.05 assuming iid samples");
        for (const PooledRuns* pr : stationary(plan)) {
            const int n = pr->params.n;
            const double root = std::sqrt(static_cast<double>(n));
            std::vector<double> scaled = pr->pooled(Observable::X);
            for (double& x : scaled) x = (x - n) / root;
            FitPoint pt;
            pt.n = n;
            pt.samples = scaled.size();
            pt.estimate = ks_statistic(scaled, [&](double x) { return law.cdf(x); });
            const double crit = ks_critical(scaled.size());
            pt.ci_low = std::max(0.0, pt.estimate - crit);
            pt.ci_high = pt.estimate + crit;
            pt.std_error = crit / 1.96;
            const double p_nonneg =
                static_cast<double>(std::count_if(scaled.begin(), scaled.end(), [](double x) { return x >= 0.0; })) /
                static_cast<double>(scaled.size());
            pt.detail = {{"ks_critical_0.05", crit},
                         {"mean_scaled", mean(scaled)},
                         {"p_nonnegative", p_nonneg},
                         {"p_nonnegative_limit", law.p_nonnegative()},
                         {"split_half", split_half(pr->runs.front().X, plan.estimator.batches)}};
            absorb(rep, *pr);
            rep.points.push_back(std::move(pt));
        }
        rep.verdicts["ks_non_increasing"] = non_increasing(rep);
        rep.verdicts["ks_at_max_n"] = rep.points.back().estimate;
        write_outputs(plan, rep, Observable::X);
        return rep;
    }

    /// E[Q]/n^{3/4} against x*, plus the log-log slope of E[Q] in n.
    FitReport run_lof_fixed_point(const ExperimentPlan& plan) {
        expect_kind(plan, ExperimentKind::lof_fixed_point);
        plan.validate();
        const double target = x_star(plan.beta, plan.theta);
        FitReport rep = start_report(plan, "batch means (single replication) or replication means, 95% normal CI");
        std::vector<double> ns, qs;
        for (const PooledRuns* pr : stationary(plan)) {
            const int n = pr->params.n;
            const double scale = lof_space_scale(n);
            const MeanEstimate q = pr->estimate(Observable::Q, [](double x) { return x; }, plan.estimator.batches);
            FitPoint pt;
            pt.n = n;
            pt.samples = pr->pooled(Observable::Q).size();
            pt.estimate = q.mean / scale;
            pt.std_error = q.std_error / scale;
            pt.ci_low = pt.estimate - 1.96 * pt.std_error;
            pt.ci_high = pt.estimate + 1.96 * pt.std_error;
            pt.detail = {{"mean_Q", q.mean},
                         {"mean_Q_se", q.std_error},
                         {"x_star", target},
                         {"relative_error", target > 0.0 ? std::abs(pt.estimate - target) / target : pt.estimate},
                         {"ci_contains_x_star", pt.ci_low <= target && target <= pt.ci_high},
                         {"split_half", split_half(pr->runs.front().Q, plan.estimator.batches)}};
            ns.push_back(n);
            qs.push_back(q.mean);
            absorb(rep, *pr);
            rep.points.push_back(std::move(pt));
        }
        if (ns.size() >= 2 && std::all_of(qs.begin(), qs.end(), [](double q) { return q > 0.0; })) {
            rep.fit = loglog_slope_fit(ns, qs);
            rep.verdicts["slope"] = rep.fit->slope;
        }
        rep.verdicts["x_star"] = target;
        rep.verdicts["estimate_at_max_n"] = rep.points.back().estimate;
        write_outputs(plan, rep, Observable::Q);
        return rep;
    }

    /// Mean LOF-scaled path from a fresh start at x0 against the closed form.
    FitReport run_lof_transient(const ExperimentPlan& plan) {
        expect_kind(plan, ExperimentKind::lof_transient);
        plan.validate();
        const OdeSpec ode{plan.beta, plan.theta, plan.x0};
        std::vector<double> grid(plan.grid_points);
        for (std::size_t k = 0; k < grid.size(); ++k)
            grid[k] = plan.t_end * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
        FitReport rep = start_report(plan, "mean over independent replications, 95% normal CI per grid point");
        for (int n : plan.n_values) {
            const ModelParams p = make_params(n, plan.beta, plan.theta, plan.mode);
            const double tscale = lof_time_scale(n);
            const auto x0_count = static_cast<long>(std::llround(plan.x0 * lof_space_scale(n)));
            const InitSpec init = InitSpec::fresh(n + x0_count);
            std::vector<double> real_grid;
            for (double t : grid) real_grid.push_back(tscale * t);
            const double horizon = real_grid.back();
            std::vector<std::vector<double>> paths(plan.replications);
            std::vector<InvariantReport> invs(plan.replications);
            std::vector<char> cons(plan.replications, 1);
            parallel_for(plan.replications, std::max(workers_, plan.workers), [&](std::size_t r) {
                SeedSpec seed{plan.seed_root, "lof_transient", static_cast<std::uint64_t>(n), r, "main"};
                const SimulationResult sim = simulate(p, init, horizon, seed, real_grid, {false, false});
                paths[r] = lof_scale(sim.x_path(), n, grid).values;
                invs[r] = sim.invariants;
                cons[r] = sim.conserved;
            });
            std::vector<double> m(grid.size()), se(grid.size()), closed(grid.size());
            double gap = 0.0;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                std::vector<double> col;
                for (const auto& path : paths) col.push_back(path[k]);
                const MeanEstimate e = iid_mean(col);
                m[k] = e.mean;
                se[k] = e.std_error;
                closed[k] = lof_closed(grid[k], ode);
                gap = std::max(gap, std::abs(m[k] - closed[k]));
            }
            for (std::size_t r = 0; r < plan.replications; ++r) {
                rep.invariants += invs[r];
                rep.conserved = rep.conserved && cons[r];
            }
            FitPoint pt;
            pt.n = n;
            pt.samples = plan.replications;
            pt.estimate = gap;
            pt.std_error = *std::max_element(se.begin(), se.end());
            pt.ci_low = std::max(0.0, gap - 1.96 * pt.std_error);
            pt.ci_high = gap + 1.96 * pt.std_error;
            pt.detail = {{"grid", grid}, {"mean_path", m}, {"std_error", se}, {"closed_form", closed},
                         {"x0_count", x0_count}};
            rep.points.push_back(std::move(pt));
        }
        rep.verdicts["sup_gap_at_max_n"] = rep.points.back().estimate;
        if (!plan.output.empty()) {
            std::filesystem::create_directories(plan.output);
            for (const auto& pt : rep.points) {
                auto out = open_output(plan.output + "/lof_transient_n" + std::to_string(pt.n) + ".csv");
                out << "t,mean,std_error,closed_form\n";
                const auto& g = pt.detail.at("grid");
                for (std::size_t k = 0; k < g.size(); ++k)
                    out << fmt17(g[k].get<double>()) << ',' << fmt17(pt.detail["mean_path"][k].get<double>()) << ','
                        << fmt17(pt.detail["std_error"][k].get<double>()) << ','
                        << fmt17(pt.detail["closed_form"][k].get<double>()) << '\n';
            }
            write_summary(plan, rep);
        }
        return rep;
    }

    /// P((X - n)/sqrt(n) > M) per n.
    FitReport run_diffusion_divergence(const ExperimentPlan& plan) {
        expect_kind(plan, ExperimentKind::diffusion_divergence);
        plan.validate();
        FitReport rep = start_report(plan, "batch means of the indicator (or replication means), 95% normal CI");
        for (const PooledRuns* pr : stationary(plan)) {
            const int n = pr->params.n;
            const double root = std::sqrt(static_cast<double>(n));
            const double m = plan.threshold;
            const MeanEstimate e = pr->estimate(
                Observable::X, [&](double x) { return (x - n) / root > m ? 1.0 : 0.0; }, plan.estimator.batches);
            FitPoint pt;
            pt.n = n;
            pt.samples = pr->pooled(Observable::X).size();
            pt.estimate = e.mean;
            pt.std_error = e.std_error;
            pt.ci_low = std::max(0.0, e.ci_low());
            pt.ci_high = std::min(1.0, e.ci_high());
            std::vector<double> scaled = pr->pooled(Observable::X);
            for (double& x : scaled) x = (x - n) / root;
            pt.detail = {{"threshold", m}, {"mean_scaled", mean(scaled)}};
            absorb(rep, *pr);
            rep.points.push_back(std::move(pt));
        }
        bool increasing = true;
        for (std::size_t i = 1; i < rep.points.size(); ++i)
            increasing = increasing && rep.points[i].estimate > rep.points[i - 1].estimate;
        rep.verdicts["strictly_increasing"] = increasing;
        rep.verdicts["probability_at_max_n"] = rep.points.back().estimate;
        write_outputs(plan, rep, Observable::X);
        return rep;
    }

    /// E[L] per n; ratios E[L]/sqrt(n) for beta <= 0, levels otherwise.
    FitReport run_workload_scaling(const ExperimentPlan& plan) {
        expect_kind(plan, ExperimentKind::workload_scaling);
        plan.validate();
        FitReport rep = start_report(plan, "batch means (or replication means), 95% normal CI");
        const bool normalize = plan.beta <= 0.0;
        for (const PooledRuns* pr : stationary(plan)) {
            const int n = pr->params.n;
            const double div = normalize ? std::sqrt(static_cast<double>(n)) : 1.0;
            const MeanEstimate e = pr->estimate(Observable::L, [](double x) { return x; }, plan.estimator.batches);
            FitPoint pt;
            pt.n = n;
            pt.samples = pr->pooled(Observable::L).size();
            pt.estimate = e.mean / div;
            pt.std_error = e.std_error / div;
            pt.ci_low = pt.estimate - 1.96 * pt.std_error;
            pt.ci_high = pt.estimate + 1.96 * pt.std_error;
            pt.detail = {{"mean_L", e.mean}, {"mean_L_se", e.std_error}, {"normalized_by_sqrt_n", normalize}};
            absorb(rep, *pr);
            rep.points.push_back(std::move(pt));
        }
        nlohmann::json ratios = nlohmann::json::array();
        bool increasing_beyond_ci = false;
        for (std::size_t i = 1; i < rep.points.size(); ++i) {
            const auto& a = rep.points[i - 1];
            const auto& b = rep.points[i];
            ratios.push_back(a.estimate != 0.0 ? b.estimate / a.estimate : 0.0);
            const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
            if (b.estimate - a.estimate > 1.96 * se) increasing_beyond_ci = true;
        }
        rep.verdicts["consecutive_ratios"] = ratios;
        rep.verdicts["increasing_beyond_ci"] = increasing_beyond_ci;
        write_outputs(plan, rep, Observable::L);
        return rep;
    }

private:
    static void expect_kind(const ExperimentPlan& plan, ExperimentKind k) {
        if (plan.kind != k)
            throw ConfigError("plan kind '" + to_string(plan.kind) + "' does not match experiment '" + to_string(k) + "'");
    }

    static SeedSpec seed_for(const ExperimentPlan& plan, int n, std::size_t rep) {
        return SeedSpec{plan.seed_root, plan.seed_label, static_cast<std::uint64_t>(n), rep, "main"};
    }

    static std::string cache_key(const ExperimentPlan& plan, int n) {
        std::ostringstream os;
        os.precision(17);
        os << n << '|' << plan.beta << '|' << plan.theta << '|' << static_cast<int>(plan.mode) << '|'
           << plan.replications << '|' << plan.estimator.samples << '|' << plan.estimator.burn_in.value_or(-1.0) << '|'
           << plan.estimator.spacing.value_or(-1.0) << '|' << plan.estimator.burn_in_multiplier << '|'
           << plan.seed_root << '|' << plan.seed_label;
        return os.str();
    }

    static FitReport start_report(const ExperimentPlan& plan, std::string ci_method) {
        FitReport rep;
        rep.kind = to_string(plan.kind);
        rep.params = plan.to_json();
        rep.ci_method = std::move(ci_method);
        return rep;
    }

    static void absorb(FitReport& rep, const PooledRuns& pr) {
        rep.invariants += pr.invariants;
        rep.conserved = rep.conserved && pr.conserved;
    }

    static bool non_increasing(const FitReport& rep) {
        for (std::size_t i = 1; i < rep.points.size(); ++i)
            if (rep.points[i].estimate > rep.points[i - 1].estimate) return false;
        return true;
    }

    static void write_summary(const ExperimentPlan& plan, const FitReport& rep) {
        auto out = open_output(plan.output + "/" + rep.kind + "_summary.json");
        out << rep.to_json().dump(2) << '\n';
    }

    void write_outputs(const ExperimentPlan& plan, const FitReport& rep, Observable o) {
        if (plan.output.empty()) return;
        std::filesystem::create_directories(plan.output);
        for (const PooledRuns* pr : stationary(plan)) {
            auto out = open_output(plan.output + "/" + rep.kind + "_" + to_string(o) + "_n" +
                                   std::to_string(pr->params.n) + ".csv");
            write_samples_csv(out, pr->pooled(o));
        }
        write_summary(plan, rep);
    }

    int workers_;
    std::map<std::string, PooledRuns> cache_;
};

}  // namespace corrq
