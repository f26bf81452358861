// stormbo: scenario optimization runs, seed sweeps, and uncertainty studies
// with machine-readable CSV/JSON outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stormbo/mlhgp.hpp"
#include "stormbo/optimizer.hpp"
#include "stormbo/rng.hpp"
#include "stormbo/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stormbo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Shortest round-trip representation keeps CSV outputs byte-stable.
std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

double raw_metric(const Scenario& sc, double internal_value) {
    return sc.maximize ? -internal_value : internal_value;
}

std::string trace_csv(const Scenario& sc, const Trace& trace) {
    const int d = sc.dimension();
    std::string csv = "iteration";
    for (int k = 0; k < d; ++k) csv += ",x_" + std::to_string(k);
    csv += ",z,storm_id\n";
    for (int i = 0; i < trace.size(); ++i) {
        const auto& rec = trace.records[i];
        csv += std::to_string(i);
        for (int k = 0; k < d; ++k) csv += "," + fmt(rec.decision[k]);
        csv += "," + fmt(raw_metric(sc, rec.value));
        csv += "," + std::to_string(rec.storm_id) + "\n";
    }
    return csv;
}

double final_best(const Scenario& sc, const Trace& trace) {
    double best = raw_metric(sc, trace.records.front().value);
    for (const auto& rec : trace.records) {
        const double z = raw_metric(sc, rec.value);
        best = sc.maximize ? std::max(best, z) : std::min(best, z);
    }
    return best;
}

StormSelector run_selector(const Scenario& sc, std::uint64_t seed) {
    if (sc.kind == ScenarioKind::theta && sc.storms.size() > 1)
        return RandomStorm{derive_seed(seed, 0x5701)};
    return FixedStorm{0};
}

struct CommonArgs {
    std::string scenario;
    std::uint64_t seed = 0;
    int budget = 30;
    std::string out = ".";
};

int cmd_run(const CommonArgs& args, const std::string& method_name_str) {
    Stopwatch watch;
    const Scenario sc = load_scenario_by_id(args.scenario);
    const Method method = method_from_string(method_name_str);
    const Objective obj = make_minimization_objective(sc, run_selector(sc, args.seed));

    Trace trace;
    ControlDecision best_decision;
    switch (method) {
        case Method::bo: {
            BOConfig cfg;
            cfg.n_total = args.budget;
            cfg.seed = args.seed;
            BOResult res = bayes_optimize(obj, cfg);
            trace = std::move(res.trace);
            best_decision = res.best;
            break;
        }
        case Method::ga: {
            const int pop = std::clamp(args.budget / 3, 2, 20);
            SearchResult res = ga_optimize(obj, pop, 1 << 20, args.seed, args.budget);
            trace = std::move(res.trace);
            best_decision = res.best;
            break;
        }
        case Method::random: {
            SearchResult res = random_search(obj, args.budget, args.seed);
            trace = std::move(res.trace);
            best_decision = res.best;
            break;
        }
    }

    fs::create_directories(args.out);
    write_file(fs::path(args.out) / "trace.csv", trace_csv(sc, trace));

    json summary;
    summary["scenario"] = sc.id;
    summary["method"] = method_name_str;
    summary["budget"] = args.budget;
    summary["seed"] = args.seed;
    summary["maximize"] = sc.maximize;
    summary["best_decision"] = std::vector<double>(best_decision.data(),
                                                   best_decision.data() + best_decision.size());
    summary["best_metric"] = final_best(sc, trace);
    summary["n_evaluations"] = trace.size();
    summary["wall_time_s"] = watch.seconds();
    write_file(fs::path(args.out) / "summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::vector<std::string>& methods, int n_seeds,
              int jobs) {
    Stopwatch watch;
    const Scenario sc = load_scenario_by_id(args.scenario);

    auto factory = [&sc](std::uint64_t seed) {
        return make_minimization_objective(sc, run_selector(sc, seed));
    };

    std::string csv = "method,seed,best\n";
    json summary;
    summary["scenario"] = sc.id;
    summary["budget"] = args.budget;
    summary["n_seeds"] = n_seeds;
    summary["base_seed"] = args.seed;
    summary["maximize"] = sc.maximize;
    json per_method = json::object();

    for (const auto& name : methods) {
        const Method method = method_from_string(name);
        SweepSummary sweep = seed_sweep(factory, method, n_seeds, args.budget, args.seed, jobs);

        // Summaries are reported in raw metric units (theta flips sign).
        std::vector<double> bests;
        for (const auto& run : sweep.runs) {
            if (!run.ok) continue;
            bests.push_back(sc.maximize ? -run.best : run.best);
        }
        double mean = 0.0;
        for (double b : bests) mean += b;
        mean = bests.empty() ? 0.0 : mean / bests.size();
        double ss = 0.0;
        for (double b : bests) ss += (b - mean) * (b - mean);
        const double stddev = bests.size() > 1 ? std::sqrt(ss / (bests.size() - 1)) : 0.0;

        for (const auto& run : sweep.runs) {
            if (run.ok) {
                csv += name + "," + std::to_string(run.seed) + "," +
                       fmt(sc.maximize ? -run.best : run.best) + "\n";
            }
        }
        json m;
        m["mean"] = mean;
        m["std"] = stddev;
        m["n_failed"] = sweep.n_failed;
        m["complete"] = sweep.complete;
        if (sweep.n_failed > 0) {
            json errs = json::array();
            for (const auto& run : sweep.runs)
                if (!run.ok) errs.push_back({{"seed", run.seed}, {"error", run.error}});
            m["failures"] = errs;
        }
        per_method[name] = m;
    }
    summary["methods"] = per_method;
    summary["wall_time_s"] = watch.seconds();

    fs::create_directories(args.out);
    write_file(fs::path(args.out) / "sweep.csv", csv);
    write_file(fs::path(args.out) / "sweep_summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int cmd_uq(const CommonArgs& args, int grid_resolution, int n_storms) {
    Stopwatch watch;
    Scenario sc = load_scenario_by_id(args.scenario);
    if (sc.dimension() != 1)
        throw ConfigError("uq requires a single-decision scenario (theta)");
    if (n_storms < 1 || n_storms > static_cast<int>(sc.storms.size()))
        throw ConfigError("uq: --n-storms must be in [1, " +
                          std::to_string(sc.storms.size()) + "]");
    sc.storms.resize(n_storms);

    // (a) BO with a randomized storm per evaluation.
    const Objective obj =
        make_minimization_objective(sc, RandomStorm{derive_seed(args.seed, 0x5702)});
    BOConfig cfg;
    cfg.n_total = args.budget;
    cfg.seed = args.seed;
    BOResult bo = bayes_optimize(obj, cfg);

    // (b, c) heteroscedastic and homoscedastic fits on the raw-metric trace.
    Dataset ds;
    ds.inputs.resize(bo.trace.size(), 1);
    ds.targets.resize(bo.trace.size());
    ds.storm_ids.resize(bo.trace.size());
    for (int i = 0; i < bo.trace.size(); ++i) {
        ds.inputs(i, 0) = bo.trace.records[i].decision[0];
        ds.targets[i] = raw_metric(sc, bo.trace.records[i].value);
        ds.storm_ids[i] = bo.trace.records[i].storm_id;
    }
    const MLHGPModel mlhgp = fit_mlhgp(ds, 100, 10, -1.0, derive_seed(args.seed, 0x5703));
    const GPModel gp = GPModel::fit(ds, default_init(ds), 5, derive_seed(args.seed, 0x5704));

    // (d) brute-force oracle over the grid and the storm ensemble.
    const UncertaintyTable oracle = empirical_uncertainty(sc, grid_resolution, sc.storms);

    std::string csv = "x_grid,empirical_mean,empirical_std,mlhgp_mean,mlhgp_std,gp_mean,gp_std\n";
    double mlhgp_err = 0.0, gp_err = 0.0;
    for (int g = 0; g < grid_resolution; ++g) {
        ControlDecision x(1);
        x[0] = oracle.x[g];
        const Prediction pm = mlhgp.posterior(x);
        const Prediction pg = gp.posterior_with_noise(x);
        const double mlhgp_std = std::sqrt(std::max(pm.variance, 0.0));
        const double gp_std = std::sqrt(std::max(pg.variance, 0.0));
        mlhgp_err += std::abs(mlhgp_std - oracle.stddev[g]);
        gp_err += std::abs(gp_std - oracle.stddev[g]);
        csv += fmt(oracle.x[g]) + "," + fmt(oracle.mean[g]) + "," + fmt(oracle.stddev[g]) + "," +
               fmt(pm.mean) + "," + fmt(mlhgp_std) + "," + fmt(pg.mean) + "," + fmt(gp_std) + "\n";
    }
    mlhgp_err /= grid_resolution;
    gp_err /= grid_resolution;

    fs::create_directories(args.out);
    write_file(fs::path(args.out) / "uq.csv", csv);

    json summary;
    summary["scenario"] = sc.id;
    summary["budget"] = args.budget;
    summary["grid_resolution"] = grid_resolution;
    summary["n_storms"] = n_storms;
    summary["seed"] = args.seed;
    summary["oracle_simulations"] = grid_resolution * n_storms;
    summary["mlhgp_std_mae"] = mlhgp_err;
    summary["gp_std_mae"] = gp_err;
    summary["empirical_std_min"] = oracle.stddev.minCoeff();
    summary["empirical_std_max"] = oracle.stddev.maxCoeff();
    summary["mlhgp_converged"] = mlhgp.converged();
    summary["mlhgp_iterations"] = mlhgp.iterations_used();
    summary["best_decision"] = bo.best[0];
    summary["wall_time_s"] = watch.seconds();
    write_file(fs::path(args.out) / "uq_summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stormwater control optimization and uncertainty quantification"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string method = "bo";
    std::vector<std::string> methods;
    int n_seeds = 2;
    int jobs = 1;
    int grid_resolution = 101;
    int n_storms = 20;

    auto* run = app.add_subcommand("run", "Optimize one scenario with one method");
    run->add_option("--scenario", args.scenario, "Scenario id (gamma, epsilon, theta)")
        ->required();
    run->add_option("--method", method, "Optimizer: bo, ga or random");
    run->add_option("--budget", args.budget, "Objective evaluation budget")->required();
    run->add_option("--seed", args.seed, "Random seed")->required();
    run->add_option("--out", args.out, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Repeat runs across seeds and summarize");
    sweep->add_option("--scenario", args.scenario, "Scenario id")->required();
    sweep->add_option("--method", methods, "Methods to compare (repeat or comma-separate)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--seeds", n_seeds, "Number of seeds")->required();
    sweep->add_option("--budget", args.budget, "Objective evaluation budget per run")
        ->required();
    sweep->add_option("--seed", args.seed, "Base seed (runs use seed, seed+1, ...)")
        ->required();
    sweep->add_option("--jobs", jobs, "Concurrent runs");
    sweep->add_option("--out", args.out, "Output directory")->required();

    auto* uq = app.add_subcommand("uq", "Uncertainty study: BO + MLH-GP vs empirical oracle");
    uq->add_option("--scenario", args.scenario, "Scenario id (default theta)");
    uq->add_option("--budget", args.budget, "BO evaluation budget")->required();
    uq->add_option("--grid-resolution", grid_resolution, "Oracle grid points");
    uq->add_option("--n-storms", n_storms, "Ensemble storms used");
    uq->add_option("--seed", args.seed, "Random seed")->required();
    uq->add_option("--out", args.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(args, method);
        if (sweep->parsed()) return cmd_sweep(args, methods, n_seeds, jobs);
        if (args.scenario.empty()) args.scenario = "theta";
        return cmd_uq(args, grid_resolution, n_storms);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
