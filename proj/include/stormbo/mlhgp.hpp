#ifndef STORMBO_MLHGP_HPP
#define STORMBO_MLHGP_HPP

#include <cstdint>
#include <functional>

#include "stormbo/gp.hpp"

namespace stormbo {

/// Most Likely Heteroscedastic GP: a mean GP over (x, z) combined with a
/// noise GP over (x, log empirical variance). The combined posterior uses
/// K + R in place of K + sigma_n^2 I, R = diag(exp(noise-GP mean at x_i)).
class MLHGPModel {
public:
    /// One combine step: computes r_diag from noise_gp at mean_gp's training
    /// inputs and factorizes K + R.
    static MLHGPModel combine(const GPModel& mean_gp, const GPModel& noise_gp);

    /// Posterior at x with observation-level variance (latent + R*(x)).
    Prediction posterior(const ControlDecision& x) const;
    /// Posterior at x with latent-function variance only.
    Prediction posterior_latent(const ControlDecision& x) const;
    /// Input-dependent noise variance R*(x) = exp(noise-GP mean at x).
    double noise_variance_at(const ControlDecision& x) const;

    Eigen::VectorXd posterior_mean_at_training() const;

    const GPModel& mean_gp() const { return mean_gp_; }
    const GPModel& noise_gp() const { return noise_gp_; }
    const Eigen::VectorXd& r_diag() const { return r_diag_; }
    const Eigen::MatrixXd& chol() const { return L_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    double jitter() const { return jitter_; }
    int iterations_used() const { return iterations_used_; }
    bool converged() const { return converged_; }
    double final_delta() const { return final_delta_; }
    double tolerance() const { return tol_; }

private:
    friend MLHGPModel fit_mlhgp(const Dataset&, int, int, double, std::uint64_t);

    GPModel mean_gp_;   // kernel + standardization source for the combined posterior
    GPModel noise_gp_;  // over (x, log variance)
    Eigen::VectorXd r_diag_;
    Eigen::MatrixXd L_;      // chol of K + R (+jitter), standardized units
    Eigen::VectorXd alpha_;  // (K + R)^-1 z_std
    double jitter_ = 0.0;
    int iterations_used_ = 1;
    bool converged_ = false;
    double final_delta_ = 0.0;
    double tol_ = 0.0;
};

/// Per-training-point log empirical variance: for each x_i draws s samples
/// z_i^j ~ N(mu(x_i), var(x_i)) from gp1's posterior and returns targets
/// log(s^-1 sum_j 0.5 (z_i - z_i^j)^2), clamped at log(1e-12). Deterministic
/// given the seed.
Dataset empirical_noise(const GPModel& gp1, const Dataset& data, int s, std::uint64_t rng_seed);

/// Runs the estimate-noise / fit-noise-GP / combine loop until the max
/// absolute change of the combined posterior mean at the training inputs
/// drops to tol, or max_iters. tol <= 0 selects 1e-3 * range(z). A model that
/// hits max_iters is returned flagged non-converged.
MLHGPModel fit_mlhgp(const Dataset& data, int s = 100, int max_iters = 10, double tol = -1.0,
                     std::uint64_t rng_seed = 0x51abULL);

/// Posterior per the combined model, observation-level variance.
Prediction mlhgp_posterior(const MLHGPModel& model, const ControlDecision& x);

namespace detail {
Dataset empirical_noise_from(const std::function<Prediction(const ControlDecision&)>& post,
                             const Dataset& data, int s, std::uint64_t rng_seed);
}

} // namespace stormbo

#endif
