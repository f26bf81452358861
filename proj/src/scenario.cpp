#include "stormbo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>

#include "stormbo/config.hpp"
#include "stormbo/rng.hpp"

#ifndef STORMBO_DEFAULT_SCENARIO_DIR
#define STORMBO_DEFAULT_SCENARIO_DIR "scenarios"
#endif

namespace stormbo {

double metric_gamma(const SimResult& res, const MetricParams& p) {
    const int T = res.steps();
    const int n = res.node_count();
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += p.c1 * res.final_depths[i];
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            total += (p.c2 / T) * res.flooding(t, i);
            const double q = res.outflow(t, i);
            if (q > p.flow_threshold) total += q - p.flow_threshold;
        }
    }
    return total;
}

double metric_epsilon(const SimResult& res, const MetricParams& p) {
    const int T = res.steps();
    const int n = res.node_count();
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
        if (res.loading[t] > p.load_threshold) total += res.loading[t] - p.load_threshold;
        for (int i = 0; i < n; ++i)
            if (res.flooding(t, i) > 0.0) total += p.flood_penalty;
    }
    return total;
}

double metric_theta(const SimResult& res, const MetricParams& p) {
    if (res.node_count() != 1)
        throw std::invalid_argument("metric_theta: expects a single-basin result");
    double acc = 0.0;
    for (int t = 0; t < res.steps(); ++t) {
        const double i = res.inflow(t, 0);
        if (i <= p.eps_flow) continue;
        acc += res.flooding(t, 0) / i;
        const double q = res.outflow(t, 0);
        if (q > p.theta_flow_threshold) acc += (q - p.theta_flow_threshold) / i;
    }
    return -std::exp(acc);
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
    if (name == "gamma") return ScenarioKind::gamma;
    if (name == "epsilon") return ScenarioKind::epsilon;
    if (name == "theta") return ScenarioKind::theta;
    throw ConfigError("unknown scenario kind '" + name + "'");
}

double evaluate_metric(const Scenario& sc, const SimResult& res) {
    switch (sc.kind) {
        case ScenarioKind::gamma: return metric_gamma(res, sc.metric);
        case ScenarioKind::epsilon: return metric_epsilon(res, sc.metric);
        default: return metric_theta(res, sc.metric);
    }
}

double evaluate_decision(const Scenario& sc, const ControlDecision& x, int storm_id) {
    if (storm_id < 0 || storm_id >= static_cast<int>(sc.storms.size()))
        throw std::invalid_argument("evaluate_decision: storm id out of range");
    SimResult res = simulate(sc.network, x, sc.storms[storm_id], sc.duration);
    return evaluate_metric(sc, res);
}

namespace {

Basin basin_from(const ConfigSection& sec) {
    Basin b;
    b.id = sec.label;
    if (b.id.empty()) throw ConfigError("[node] sections need a label: [node <id>]");
    b.surface_area = sec.require_num("surface_area");
    b.max_depth = sec.require_num("max_depth");
    b.outlet_area = sec.require_num("outlet_area");
    b.discharge_coeff = sec.get_num("discharge_coeff", 0.65);
    b.initial_pollutant_conc = sec.get_num("initial_pollutant_conc", 0.0);
    b.settling_rate = sec.get_num("settling_rate", 0.0);
    b.subcatchment_area = sec.get_num("subcatchment_area", 0.0);
    b.runoff_coeff = sec.get_num("runoff_coeff", 0.0);
    b.inflow_conc = sec.get_num("inflow_conc", 0.0);
    b.base_inflow = sec.get_num("base_inflow", 0.0);
    b.base_inflow_amplitude = sec.get_num("base_inflow_amplitude", 0.0);
    b.initial_depth = sec.get_num("initial_depth", 0.0);
    return b;
}

MetricParams metric_from(const ConfigFile& cfg) {
    MetricParams p;
    if (const ConfigSection* sec = cfg.find("metric")) {
        p.flow_threshold = sec->get_num("flow_threshold", p.flow_threshold);
        p.load_threshold = sec->get_num("load_threshold", p.load_threshold);
        p.theta_flow_threshold = sec->get_num("theta_flow_threshold", p.theta_flow_threshold);
        p.c1 = sec->get_num("c1", p.c1);
        p.c2 = sec->get_num("c2", p.c2);
        p.flood_penalty = sec->get_num("flood_penalty", p.flood_penalty);
        p.eps_flow = sec->get_num("eps_flow", p.eps_flow);
    }
    return p;
}

DesignStormParams storm_params_from(const ConfigSection& sec) {
    DesignStormParams p;
    p.kind = sec.get_str("kind", p.kind);
    p.depth = sec.require_num("depth");
    p.duration = sec.require_num("duration");
    p.timestep = sec.require_num("timestep");
    return p;
}

} // namespace

Scenario load_scenario(const std::string& path) {
    const ConfigFile cfg = ConfigFile::load(path);
    const ConfigSection& meta = cfg.require("scenario");

    Scenario sc;
    sc.id = meta.require_str("id");
    sc.kind = scenario_kind_from_string(meta.get_str("kind", sc.id));
    sc.duration = meta.require_num("duration");
    sc.maximize = meta.get_bool("maximize", sc.kind == ScenarioKind::theta);
    sc.metric = metric_from(cfg);

    for (const ConfigSection* sec : cfg.all("node"))
        sc.network.nodes.push_back(basin_from(*sec));
    for (const ConfigSection* sec : cfg.all("edge")) {
        Edge e;
        e.from = sc.network.node_index(sec->require_str("from"));
        e.to = sc.network.node_index(sec->require_str("to"));
        if (e.from < 0 || e.to < 0)
            throw ConfigError("edge references unknown node in " + path);
        e.delay = sec->get_num("delay", 0.0);
        sc.network.edges.push_back(e);
    }
    sc.network.outfall = sc.network.node_index(meta.require_str("outfall"));
    if (sc.network.outfall < 0) throw ConfigError("outfall node not found in " + path);
    {
        std::istringstream ids(meta.require_str("controlled"));
        std::string id;
        while (ids >> id) {
            const int idx = sc.network.node_index(id);
            if (idx < 0) throw ConfigError("controlled node '" + id + "' not found");
            sc.network.controlled.push_back(idx);
        }
    }
    sc.network.validate();

    // Storms: a base [storm], optionally expanded into an ensemble, or a
    // composite built from repeated [burst] sections.
    const auto bursts = cfg.all("burst");
    if (!bursts.empty()) {
        const ConfigSection& base = cfg.require("storm");
        const double timestep = base.require_num("timestep");
        const int steps = static_cast<int>(std::llround(sc.duration / timestep));
        StormEvent ev;
        ev.timestep = timestep;
        ev.intensity.assign(steps, 0.0);
        for (const ConfigSection* bsec : bursts) {
            DesignStormParams p;
            p.kind = bsec->get_str("kind", p.kind);
            p.depth = bsec->require_num("depth");
            p.duration = bsec->require_num("duration");
            p.timestep = timestep;
            const StormEvent burst = generate_design_storm(p);
            const int offset = static_cast<int>(std::llround(bsec->require_num("start") / timestep));
            for (size_t k = 0; k < burst.intensity.size(); ++k) {
                const int idx = offset + static_cast<int>(k);
                if (idx >= 0 && idx < steps) ev.intensity[idx] += burst.intensity[k];
            }
        }
        sc.storms.push_back(std::move(ev));
    } else {
        const ConfigSection& storm = cfg.require("storm");
        const DesignStormParams base = storm_params_from(storm);
        if (const ConfigSection* ens = cfg.find("ensemble")) {
            const int n = static_cast<int>(ens->require_num("n"));
            sc.storms = generate_storm_ensemble(
                n, base, ens->get_num("spread_lo", 0.5), ens->get_num("spread_hi", 2.0),
                static_cast<std::uint64_t>(ens->get_num("seed", 1)));
        } else {
            sc.storms.push_back(generate_design_storm(base));
        }
    }
    return sc;
}

std::string default_scenario_dir() {
    if (const char* env = std::getenv("STORMBO_SCENARIO_DIR"); env != nullptr && *env != '\0')
        return env;
    return STORMBO_DEFAULT_SCENARIO_DIR;
}

Scenario load_scenario_by_id(const std::string& id, const std::string& dir) {
    const std::string base = dir.empty() ? default_scenario_dir() : dir;
    const std::filesystem::path path = std::filesystem::path(base) / (id + ".cfg");
    if (!std::filesystem::exists(path))
        throw ConfigError("scenario config not found: " + path.string());
    return load_scenario(path.string());
}

Objective make_objective(const Scenario& sc, const StormSelector& selector) {
    auto scenario = std::make_shared<Scenario>(sc);
    Objective obj;
    obj.dimension = sc.dimension();
    if (std::holds_alternative<FixedStorm>(selector)) {
        const int storm_id = std::get<FixedStorm>(selector).id;
        if (storm_id < 0 || storm_id >= static_cast<int>(sc.storms.size()))
            throw std::invalid_argument("make_objective: fixed storm id out of range");
        obj.evaluate = [scenario, storm_id](const ControlDecision& x) {
            return EvalOutcome{evaluate_decision(*scenario, x, storm_id), storm_id};
        };
    } else {
        const auto seed = std::get<RandomStorm>(selector).seed;
        auto rng = std::make_shared<Rng>(derive_seed(seed, 0x57d));
        obj.evaluate = [scenario, rng](const ControlDecision& x) {
            const int storm_id =
                static_cast<int>(rng->uniform_int(scenario->storms.size()));
            return EvalOutcome{evaluate_decision(*scenario, x, storm_id), storm_id};
        };
    }
    return obj;
}

Objective make_minimization_objective(const Scenario& sc, const StormSelector& selector) {
    Objective obj = make_objective(sc, selector);
    if (!sc.maximize) return obj;
    auto inner = obj.evaluate;
    obj.evaluate = [inner](const ControlDecision& x) {
        EvalOutcome out = inner(x);
        out.value = -out.value;
        return out;
    };
    return obj;
}

UncertaintyTable empirical_uncertainty(const Scenario& sc, int grid_resolution,
                                       const std::vector<StormEvent>& ensemble) {
    if (grid_resolution < 2)
        throw std::invalid_argument("empirical_uncertainty: grid_resolution must be >= 2");
    if (sc.dimension() != 1)
        throw std::invalid_argument("empirical_uncertainty: single-decision scenarios only");
    if (ensemble.empty())
        throw std::invalid_argument("empirical_uncertainty: empty ensemble");

    UncertaintyTable table;
    table.x.resize(grid_resolution);
    table.mean.resize(grid_resolution);
    table.stddev.resize(grid_resolution);
    const int m = static_cast<int>(ensemble.size());
    for (int g = 0; g < grid_resolution; ++g) {
        ControlDecision x(1);
        x[0] = static_cast<double>(g) / (grid_resolution - 1);
        Eigen::VectorXd z(m);
        for (int s = 0; s < m; ++s) {
            SimResult res = simulate(sc.network, x, ensemble[s], sc.duration);
            z[s] = evaluate_metric(sc, res);
        }
        const double mean = z.mean();
        table.x[g] = x[0];
        table.mean[g] = mean;
        table.stddev[g] =
            m > 1 ? std::sqrt((z.array() - mean).square().sum() / (m - 1)) : 0.0;
    }
    return table;
}

} // namespace stormbo
