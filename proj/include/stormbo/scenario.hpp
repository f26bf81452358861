#ifndef STORMBO_SCENARIO_HPP
#define STORMBO_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "stormbo/hydrosim.hpp"
#include "stormbo/optimizer.hpp"

namespace stormbo {

struct MetricParams {
    double flow_threshold = 0.11;        // m^3/s, gamma outflow ceiling
    double load_threshold = 1.075;       // kg/s, epsilon loading ceiling
    double theta_flow_threshold = 1.0;   // m^3/s, theta outflow ceiling
    double c1 = 1e3;                     // storage penalty per meter of final depth
    double c2 = 1e4;                     // flooding penalty factor
    double flood_penalty = 1e9;          // epsilon per flooded node-step
    double eps_flow = 1e-6;              // m^3/s inflow guard for theta ratios
};

/// sum_i c1 d_T^i + sum_t sum_i [ (c2/T) f_t^i + (q_t^i - lambda)^+ ]
double metric_gamma(const SimResult& res, const MetricParams& p);

/// sum_t [ (l_t - threshold)^+ + sum_i (flood_penalty if f_t^i > 0) ]
double metric_epsilon(const SimResult& res, const MetricParams& p);

/// -exp( sum_t [ f_t/i_t + (q_t - threshold)^+/i_t ] ) over steps with
/// i_t > eps_flow; equals -1 when nothing accrues. Single-basin results only.
double metric_theta(const SimResult& res, const MetricParams& p);

enum class ScenarioKind { gamma, epsilon, theta };

ScenarioKind scenario_kind_from_string(const std::string& name);

/// A network + storms + metric bundle loaded from a config file.
struct Scenario {
    std::string id;
    ScenarioKind kind = ScenarioKind::gamma;
    NetworkTopology network;
    std::vector<StormEvent> storms;
    MetricParams metric;
    double duration = 0.0;  // s, simulation horizon
    bool maximize = false;  // theta: larger metric values are better

    int dimension() const { return static_cast<int>(network.controlled.size()); }
};

double evaluate_metric(const Scenario& sc, const SimResult& res);

/// Simulates one decision under one of the scenario's storms and returns the
/// raw metric.
double evaluate_decision(const Scenario& sc, const ControlDecision& x, int storm_id);

Scenario load_scenario(const std::string& path);

/// Locates `<id>.cfg` in the scenario directory (STORMBO_SCENARIO_DIR
/// environment variable, falling back to the built-in default directory).
Scenario load_scenario_by_id(const std::string& id, const std::string& dir = "");

std::string default_scenario_dir();

struct FixedStorm {
    int id = 0;
};
struct RandomStorm {
    std::uint64_t seed = 0;
};
using StormSelector = std::variant<FixedStorm, RandomStorm>;

/// Wraps the scenario as a minimizable Objective returning the raw metric
/// (callers handle the theta maximization convention by negating). A
/// RandomStorm selector draws a fresh storm id per evaluation from its own
/// seeded stream; a fresh Objective instance replays the same sequence.
Objective make_objective(const Scenario& sc, const StormSelector& selector);

/// As make_objective but negates the metric when the scenario is a
/// maximization (theta), so optimizers can always minimize.
Objective make_minimization_objective(const Scenario& sc, const StormSelector& selector);

struct UncertaintyTable {
    Eigen::VectorXd x;       // grid over [0,1]
    Eigen::VectorXd mean;    // raw metric mean across the ensemble
    Eigen::VectorXd stddev;  // sample standard deviation across the ensemble
};

/// Brute-force oracle: evaluates the metric for every (grid point, storm)
/// pair and records mean and sample std per grid point.
UncertaintyTable empirical_uncertainty(const Scenario& sc, int grid_resolution,
                                       const std::vector<StormEvent>& ensemble);

} // namespace stormbo

#endif
