#ifndef STORMBO_HYDROSIM_HPP
#define STORMBO_HYDROSIM_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stormbo/types.hpp"

namespace stormbo {

/// A storage basin with an orifice outlet. Runoff is generated on the
/// attached subcatchment by the rational method; dry-weather inflow follows a
/// 24 h sinusoid. Pollutant is completely mixed and settles first-order.
struct Basin {
    std::string id;
    double surface_area = 1000.0;        // m^2
    double max_depth = 2.0;              // m
    double outlet_area = 0.1;            // m^2
    double discharge_coeff = 0.65;       // Cd
    double initial_pollutant_conc = 0.0; // kg/m^3
    double settling_rate = 0.0;          // 1/s
    double subcatchment_area = 0.0;      // m^2
    double runoff_coeff = 0.0;
    double inflow_conc = 0.0;            // kg/m^3 carried by runoff and base inflow
    double base_inflow = 0.0;            // m^3/s, diurnal offset
    double base_inflow_amplitude = 0.0;  // m^3/s, diurnal amplitude
    double initial_depth = 0.0;          // m
};

struct Edge {
    int from = -1;
    int to = -1;
    double delay = 0.0;  // s, pure advection delay
};

struct NetworkTopology {
    std::vector<Basin> nodes;
    std::vector<Edge> edges;
    std::vector<int> controlled;  // node indices, decision-vector order
    int outfall = -1;

    int node_index(const std::string& id) const;
    std::vector<int> topo_order() const;
    /// DAG with a terminal outfall reachable from every node; positive
    /// physical parameters; controlled ids valid. Throws ConfigError.
    void validate() const;
};

struct StormEvent {
    int id = 0;
    double timestep = 300.0;        // s
    std::vector<double> intensity;  // m/s, shared by all subcatchments

    double depth() const;  // integral of intensity, m
};

struct DesignStormParams {
    std::string kind = "scs_ii_like";  // "scs_ii_like" | "triangular"
    double depth = 0.05;               // m
    double duration = 21600.0;         // s
    double timestep = 300.0;           // s
};

struct SimResult {
    // Rows are outer steps, columns are nodes. Flows are step averages in
    // m^3/s; depth is end-of-step in m.
    Eigen::MatrixXd depth;
    Eigen::MatrixXd outflow;
    Eigen::MatrixXd flooding;
    Eigen::MatrixXd inflow;
    Eigen::VectorXd loading;  // outfall pollutant load, kg/s per step
    Eigen::VectorXd final_depths;
    double timestep = 0.0;

    int steps() const { return static_cast<int>(depth.rows()); }
    int node_count() const { return static_cast<int>(depth.cols()); }
};

/// Level-pool routing over the DAG with the orifice law
/// q = Cd * (x * outlet_area) * sqrt(2 g h). Explicit Euler with automatic
/// substep halving down to timestep/64; uncontrolled nodes behave as x = 1.
/// Deterministic: identical inputs give bit-identical results.
SimResult simulate(const NetworkTopology& net, const ControlDecision& controls,
                   const StormEvent& storm, double duration);

/// Hyetograph integrating exactly to `depth`. scs_ii_like is a symmetric
/// high-peak dimensionless curve, triangular peaks at duration/2.
StormEvent generate_design_storm(const DesignStormParams& p);

/// n storms with depths log-uniform in [spread_lo, spread_hi] * base depth,
/// ids 0..n-1, deterministic given the seed.
std::vector<StormEvent> generate_storm_ensemble(int n, const DesignStormParams& base,
                                                double spread_lo, double spread_hi,
                                                std::uint64_t rng_seed);

} // namespace stormbo

#endif
