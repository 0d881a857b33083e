// corrq command-line driver: simulate, experiment, limits, couple.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "corrq/corrq.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace corrq;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int workers = 1;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "TOML or JSON config file");
    cmd->add_option("--seed", c.seed, "master seed (overrides CORRQ_SEED and the config)");
    cmd->add_option("--out", c.out, "output directory (created if absent)");
    cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose,-v", c.verbose, "progress on stderr");
}

std::uint64_t parse_seed_text(const std::string& s, const char* where) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used, 0);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("invalid seed in ") + where + ": '" + s + "'");
    }
}

// --seed, then CORRQ_SEED, then the config's "seed", then 1.
std::uint64_t resolve_seed(const Common& c, const json& cfg) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("CORRQ_SEED"); env && *env) return parse_seed_text(env, "CORRQ_SEED");
    if (cfg.contains("seed")) {
        if (!cfg.at("seed").is_number_unsigned()) throw ConfigError("config field 'seed' must be a non-negative integer");
        return cfg.at("seed").get<std::uint64_t>();
    }
    return 1;
}

json load_optional(const std::string& path) { return path.empty() ? json::object() : load_config(path); }

template <class T>
T need(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config is missing required field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

void log(const Common& c, const std::string& msg) {
    if (c.verbose) std::cerr << "[corrq] " << msg << '\n';
}

std::string prepare_out(const Common& c) {
    if (!c.out.empty()) fs::create_directories(c.out);
    return c.out;
}

void emit_json(const Common& c, const std::string& file, const json& j) {
    if (!c.out.empty()) {
        auto os = open_output(c.out + "/" + file);
        os << j.dump(2) << '\n';
    }
    std::cout << j.dump(2) << '\n';
}

// Model parameters from "n", "theta", "mode" and one of "beta" / "lambda".
ModelParams params_from(const json& j) {
    const int n = need<int>(j, "n");
    const double theta = need<double>(j, "theta");
    const CorrelationMode mode = parse_mode(get_or<std::string>(j, "mode", "perfect"));
    if (j.contains("lambda")) return params_from_rate(n, need<double>(j, "lambda"), theta, mode);
    return make_params(n, need<double>(j, "beta"), theta, mode);
}

InitSpec init_from(const json& cfg, int n) {
    if (!cfg.contains("init")) return InitSpec::empty();
    const json& j = cfg.at("init");
    const auto kind = need<std::string>(j, "kind");
    if (kind == "empty") return InitSpec::empty();
    if (kind == "fresh") {
        if (j.contains("x0_scaled"))
            return InitSpec::fresh(n + std::llround(need<double>(j, "x0_scaled") * lof_space_scale(n)));
        return InitSpec::fresh(need<long>(j, "x0"));
    }
    if (kind == "general")
        return InitSpec::general(get_or<std::vector<double>>(j, "phase1_remaining", {}),
                                 get_or<std::vector<double>>(j, "queued_waits", {}));
    throw ConfigError("init.kind must be empty, fresh or general (got '" + kind + "')");
}

int cmd_simulate(const Common& c) {
    if (c.config.empty()) throw ConfigError("simulate needs --config");
    const json cfg = load_config(c.config);
    const ModelParams p = params_from(cfg);
    const double horizon = need<double>(cfg, "horizon");
    const double dt = get_or<double>(cfg, "dt", 0.1);
    const InitSpec init = init_from(cfg, p.n);
    const std::uint64_t seed = resolve_seed(c, cfg);
    SimOptions opts;
    opts.offered_wait = get_or<bool>(cfg, "offered_wait", true);
    opts.deep_checks = get_or<bool>(cfg, "deep_checks", false);
    const auto grid = uniform_grid(horizon, dt);
    log(c, "simulate n=" + std::to_string(p.n) + " horizon=" + fmt17(horizon) + " seed=" + std::to_string(seed));
    const SimulationResult r = simulate(p, init, horizon, SeedSpec{seed, "simulate"}, grid, opts);

    const json summary = {{"seed", seed},
                          {"params", to_json(p)},
                          {"horizon", horizon},
                          {"dt", dt},
                          {"arrivals", r.counts.arrivals},
                          {"departures", r.counts.departures},
                          {"abandonments", r.counts.abandonments},
                          {"initial", r.counts.initial},
                          {"in_system_at_horizon", r.trace.empty() ? 0L : r.trace.back().X},
                          {"epochs_checked", r.invariants.epochs_checked},
                          {"invariant_violations", r.invariants.total()},
                          {"conserved", r.conserved}};
    if (prepare_out(c).empty()) {
        write_trace_csv(std::cout, r.trace);
        log(c, summary.dump());
    } else {
        auto os = open_output(c.out + "/trace.csv");
        write_trace_csv(os, r.trace);
        auto js = open_output(c.out + "/trace_summary.json");
        js << summary.dump(2) << '\n';
        log(c, "wrote " + c.out + "/trace.csv");
    }
    if (r.invariants.total() != 0 || !r.conserved) {
        std::cerr << "corrq: invariant violations detected\n";
        return 1;
    }
    return 0;
}

int cmd_experiment(const Common& c, const std::string& plan_path) {
    const std::string path = !plan_path.empty() ? plan_path : c.config;
    if (path.empty()) throw ConfigError("experiment needs --plan (or --config)");
    json cfg = load_config(path);
    cfg["seed"] = resolve_seed(c, cfg);
    ExperimentPlan plan = plan_from_json(cfg);
    plan.output = prepare_out(c);
    plan.workers = std::max(plan.workers, c.workers);
    log(c, "experiment " + to_string(plan.kind) + " seed=" + std::to_string(plan.seed_root));
    Harness h(plan.workers);
    const FitReport rep = h.run(plan);
    std::cout << rep.to_json().dump(2) << '\n';
    if (rep.invariants.total() != 0 || !rep.conserved) {
        std::cerr << "corrq: invariant violations detected\n";
        return 1;
    }
    return 0;
}

struct LimitsArgs {
    bool xstar = false, hw = false, lof = false;
    std::optional<double> beta, theta;
    double x0 = 0.0, from = -4.0, to = 4.0, t_end = 10.0;
    int points = 81;
};

int cmd_limits(const Common& c, LimitsArgs a) {
    const json cfg = load_optional(c.config);
    if (!a.beta && cfg.contains("beta")) a.beta = need<double>(cfg, "beta");
    if (!a.theta && cfg.contains("theta")) a.theta = need<double>(cfg, "theta");
    if (cfg.contains("x0")) a.x0 = need<double>(cfg, "x0");
    if (!a.xstar && !a.hw && !a.lof) throw ConfigError("limits needs one of --xstar, --hw, --lof");
    if (!a.beta) throw ConfigError("limits needs --beta");
    require(a.points >= 2, "--points must be >= 2");
    if (a.xstar) {
        if (!a.theta) throw ConfigError("--xstar needs --theta");
        std::cout << fmt17(x_star(*a.beta, *a.theta)) << '\n';
        return 0;
    }
    prepare_out(c);
    std::ostringstream table;
    json summary = {{"beta", *a.beta}, {"points", a.points}};
    std::string name;
    if (a.hw) {
        const HwStationaryLaw law(*a.beta);
        name = "hw_stationary";
        table << "x,pdf,cdf\n";
        for (int i = 0; i < a.points; ++i) {
            const double x = a.from + (a.to - a.from) * i / (a.points - 1);
            table << fmt17(x) << ',' << fmt17(law.pdf(x)) << ',' << fmt17(law.cdf(x)) << '\n';
        }
        summary["p_nonnegative"] = law.p_nonnegative();
    } else {
        if (!a.theta) throw ConfigError("--lof needs --theta");
        const OdeSpec ode{*a.beta, *a.theta, a.x0};
        std::vector<double> grid(static_cast<std::size_t>(a.points));
        for (int i = 0; i < a.points; ++i) grid[static_cast<std::size_t>(i)] = a.t_end * i / (a.points - 1);
        const auto rk = lof_ode_solve(ode, grid);
        name = "lof";
        table << "t,closed_form,rk4\n";
        double gap = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double cf = lof_closed(grid[i], ode);
            gap = std::max(gap, std::abs(cf - rk[i]));
            table << fmt17(grid[i]) << ',' << fmt17(cf) << ',' << fmt17(rk[i]) << '\n';
        }
        summary["theta"] = *a.theta;
        summary["x0"] = a.x0;
        summary["x_star"] = x_star(*a.beta, *a.theta);
        summary["rk4_sup_gap"] = gap;
    }
    if (c.out.empty()) {
        std::cout << table.str();
    } else {
        auto os = open_output(c.out + "/" + name + ".csv");
        os << table.str();
        auto js = open_output(c.out + "/" + name + "_summary.json");
        js << summary.dump(2) << '\n';
    }
    return 0;
}

struct CoupleArgs {
    std::string kind;
    std::optional<int> n;
    std::optional<double> beta, theta, horizon;
    std::optional<std::uint64_t> customers;
};

int cmd_couple(const Common& c, const CoupleArgs& a) {
    json cfg = load_optional(c.config);
    if (!a.kind.empty()) cfg["kind"] = a.kind;
    if (a.n) cfg["n"] = *a.n;
    if (a.beta) cfg["beta"] = *a.beta;
    if (a.theta) cfg["theta"] = *a.theta;
    if (a.horizon) cfg["horizon"] = *a.horizon;
    if (a.customers) cfg["customers"] = *a.customers;
    const CouplingKind kind = parse_coupling_kind(need<std::string>(cfg, "kind"));
    const std::uint64_t seed = resolve_seed(c, cfg);
    const SeedSpec spec{seed, "couple_" + to_string(kind)};
    log(c, "couple " + to_string(kind) + " seed=" + std::to_string(seed));
    CouplingReport rep;
    switch (kind) {
        case CouplingKind::pc_pc: {
            // Each system block inherits n from the top level unless it sets its own.
            json s1 = need<json>(cfg, "system1"), s2 = need<json>(cfg, "system2");
            for (json* s : {&s1, &s2})
                if (!s->contains("n") && cfg.contains("n")) (*s)["n"] = cfg["n"];
            rep = couple_pc_pc(params_from(s1), params_from(s2), get_or<double>(cfg, "horizon", kInf), spec,
                               get_or<std::uint64_t>(cfg, "customers", 100000));
            break;
        }
        case CouplingKind::pc_infserver:
            rep = couple_pc_infserver(params_from(cfg), need<double>(cfg, "horizon"), spec);
            break;
        case CouplingKind::pc_erlangA_stat: {
            EstimatorConfig est;
            est.samples = get_or<std::size_t>(cfg, "samples", 2000);
            rep = compare_pc_erlangA_stationary(params_from(cfg), est, spec, get_or<double>(cfg, "alpha", 0.01));
            break;
        }
    }
    prepare_out(c);
    emit_json(c, "couple_" + to_string(kind) + ".json", rep.to_json());
    return rep.violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corrq: many-server queues with correlated service and patience"};
    app.require_subcommand(1);
    Common common;

    auto* sim = app.add_subcommand("simulate", "single trace run, CSV out");
    add_common(sim, common);

    std::string plan_path;
    auto* exp = app.add_subcommand("experiment", "run a harness experiment from a plan file");
    add_common(exp, common);
    exp->add_option("--plan", plan_path, "plan file (TOML or JSON)");

    LimitsArgs la;
    auto* lim = app.add_subcommand("limits", "tabulate x*, the stationary diffusion law, or the fluid path");
    add_common(lim, common);
    lim->add_flag("--xstar", la.xstar, "print the fluid fixed point");
    lim->add_flag("--hw", la.hw, "tabulate the stationary diffusion pdf/cdf");
    lim->add_flag("--lof", la.lof, "tabulate the fluid path (closed form and RK4)");
    lim->add_option("--beta", la.beta);
    lim->add_option("--theta", la.theta);
    lim->add_option("--x0", la.x0);
    lim->add_option("--from", la.from);
    lim->add_option("--to", la.to);
    lim->add_option("--t-end", la.t_end);
    lim->add_option("--points", la.points);

    CoupleArgs ca;
    auto* cpl = app.add_subcommand("couple", "run a coupling check");
    add_common(cpl, common);
    cpl->add_option("--kind", ca.kind, "pc_pc, pc_infserver or pc_erlangA_stat");
    cpl->add_option("--n", ca.n);
    cpl->add_option("--beta", ca.beta);
    cpl->add_option("--theta", ca.theta);
    cpl->add_option("--horizon", ca.horizon);
    cpl->add_option("--customers", ca.customers);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sim) return cmd_simulate(common);
        if (*exp) return cmd_experiment(common, plan_path);
        if (*lim) return cmd_limits(common, la);
        if (*cpl) return cmd_couple(common, ca);
    } catch (const ConfigError& e) {
        std::cerr << "corrq: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "corrq: error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
