#ifndef STORMBO_ACQUISITION_HPP
#define STORMBO_ACQUISITION_HPP

#include <cstdint>
#include <optional>

#include "stormbo/gp.hpp"
#include "stormbo/types.hpp"

namespace stormbo {

struct AcquisitionConfig {
    int n_starts = 0;         // multi-start local searches; 0 means 10*d
    int grid_fallback = 201;  // dense pre-scan per dimension, used when d <= 2
    // Best surrogate value so far in the minimization convention (lowest
    // posterior mean at an evaluated decision). When unset it is computed
    // from the model's training inputs.
    std::optional<double> incumbent;
};

/// Closed-form expected improvement, maximization convention:
/// E[(f - incumbent)^+] for f ~ N(mu, sigma^2). Returns max(mu - incumbent, 0)
/// in the sigma = 0 limit; never negative.
double expected_improvement(double mu, double sigma, double incumbent);

/// Picks the decision maximizing EI over [0,1]^d for the *minimization* of
/// the model's targets (the surrogate is negated internally so the
/// maximization form applies unchanged). Deterministic given the seed; ties
/// within 1e-12 resolve to the lexicographically smallest decision.
ControlDecision maximize(const GPModel& model, const AcquisitionConfig& cfg,
                         std::uint64_t rng_seed);

/// EI of a candidate decision under the same convention maximize() uses.
double ei_for_minimization(const GPModel& model, const ControlDecision& x, double incumbent_min);

} // namespace stormbo

#endif
