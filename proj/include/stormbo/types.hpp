#ifndef STORMBO_TYPES_HPP
#define STORMBO_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace stormbo {

// A control decision is a vector of fractional valve/dam openings, one per
// controlled asset, each coordinate in [0,1].
using ControlDecision = Eigen::VectorXd;

// Thrown when a linear-algebra step cannot be completed (e.g. a kernel
// matrix that stays indefinite after jitter escalation).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the network simulator cannot take a stable step.
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on malformed scenario/network configuration files.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void require_unit_box(const Eigen::VectorXd& x, const char* who) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
            throw std::invalid_argument(std::string(who) + ": coordinate " +
                                        std::to_string(i) + " = " + std::to_string(x[i]) +
                                        " outside [0,1]");
        }
    }
}

} // namespace stormbo

#endif
