#ifndef STORMBO_GP_HPP
#define STORMBO_GP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "stormbo/types.hpp"

namespace stormbo {

/// Squared-exponential kernel hyperparameters. signal_variance and
/// noise_variance are in (target unit)^2, lengthscale in decision-space units.
struct Hyperparams {
    double signal_variance = 1.0;
    double lengthscale = 0.5;
    double noise_variance = 1e-4;

    void validate() const;
};

/// Training data: decisions (rows of `inputs`, each coordinate in [0,1]),
/// the observed performance metric per decision, and optionally the id of the
/// storm each observation was simulated under.
struct Dataset {
    Eigen::MatrixXd inputs;   // n x d
    Eigen::VectorXd targets;  // n
    std::vector<int> storm_ids;

    int size() const { return static_cast<int>(targets.size()); }
    int dim() const { return static_cast<int>(inputs.cols()); }
    void validate() const;
};

/// k(x, x') = sigma^2 exp(-|x - x'|^2 / (2 l^2)). Isotropic, single shared
/// lengthscale.
double kernel_se(const ControlDecision& x, const ControlDecision& x2, const Hyperparams& h);

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Hyperparams& h);
Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& X, const ControlDecision& x,
                              const Hyperparams& h);

/// Log marginal likelihood of the data under h, computed on the targets as
/// given:  -1/2 z^T Kz^-1 z - 1/2 log|Kz| - n/2 log(2 pi),  Kz = K + sigma_n^2 I.
double log_marginal_likelihood(const Dataset& data, const Hyperparams& h);

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// A fitted GP. Targets are standardized (zero mean, unit variance) before
/// fitting; hyperparams(), chol() and alpha() live in that standardized space
/// while posterior() reports in the original target units. Immutable once
/// fitted, safe to share across threads.
class GPModel {
public:
    GPModel() = default;  // empty until assigned from fit()/with_hyperparams()

    /// Maximizes the log marginal likelihood over log-transformed
    /// hyperparameters with a Nelder-Mead local search started from `init`
    /// plus `restarts` log-uniform random initializations. The returned
    /// model's LML is never below LML(init).
    static GPModel fit(const Dataset& data, const Hyperparams& init, int restarts = 5,
                       std::uint64_t seed = 0x5eedULL);

    /// Builds a model at fixed hyperparameters (given in raw target units);
    /// only the factorization is computed.
    static GPModel with_hyperparams(const Dataset& data, const Hyperparams& raw);

    /// Posterior of the latent function at x (original target units);
    /// variance is clamped at zero.
    Prediction posterior(const ControlDecision& x) const;

    /// Posterior of an observation at x: latent variance plus noise variance.
    Prediction posterior_with_noise(const ControlDecision& x) const;

    /// Batch posterior over the rows of Xq.
    void posterior(const Eigen::MatrixXd& Xq, Eigen::VectorXd& mean,
                   Eigen::VectorXd& variance) const;

    /// Posterior means at the training inputs.
    Eigen::VectorXd posterior_mean_at_training() const;

    const Hyperparams& hyperparams() const { return hp_; }
    /// Fitted hyperparameters scaled back to the original target units.
    Hyperparams raw_hyperparams() const;

    const Dataset& data() const { return data_; }
    const Eigen::MatrixXd& chol() const { return L_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::VectorXd& standardized_targets() const { return z_std_; }
    double target_shift() const { return shift_; }
    double target_scale() const { return scale_; }
    double fitted_lml() const { return lml_; }
    double jitter() const { return jitter_; }
    int dim() const { return data_.dim(); }
    int size() const { return data_.size(); }

private:
    void factorize();

    Hyperparams hp_;  // standardized-target units
    Dataset data_;    // raw, as given
    Eigen::VectorXd z_std_;
    double shift_ = 0.0;
    double scale_ = 1.0;
    Eigen::MatrixXd L_;      // chol of K + sigma_n^2 I + jitter I
    Eigen::VectorXd alpha_;  // (K + sigma_n^2 I + jitter I)^-1 z_std
    double lml_ = 0.0;
    double jitter_ = 0.0;
};

/// Reasonable raw-unit starting hyperparameters for fit().
Hyperparams default_init(const Dataset& data);

namespace detail {

struct CholJitter {
    Eigen::MatrixXd L;
    double jitter;
};

/// Cholesky of a symmetric matrix with a 1e-10 diagonal jitter floor,
/// escalating x10 up to 1e-4 before giving up.
CholJitter chol_with_jitter(const Eigen::MatrixXd& A, const char* context);

double lml_from_chol(const Eigen::MatrixXd& L, const Eigen::VectorXd& z);

} // namespace detail

} // namespace stormbo

#endif
