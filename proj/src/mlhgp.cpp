#include "stormbo/mlhgp.hpp"

#include <cmath>

#include "stormbo/rng.hpp"

namespace stormbo {

namespace detail {

Dataset empirical_noise_from(const std::function<Prediction(const ControlDecision&)>& post,
                             const Dataset& data, int s, std::uint64_t rng_seed) {
    if (s < 2) throw std::invalid_argument("empirical_noise: s must be >= 2");
    Rng rng(derive_seed(rng_seed, 0x2e0));
    const int n = data.size();
    Dataset out;
    out.inputs = data.inputs;
    out.targets.resize(n);
    for (int i = 0; i < n; ++i) {
        const Prediction p = post(data.inputs.row(i).transpose());
        const double sigma = std::sqrt(std::max(p.variance, 0.0));
        double acc = 0.0;
        for (int j = 0; j < s; ++j) {
            const double zj = p.mean + sigma * rng.normal();
            const double diff = data.targets[i] - zj;
            acc += 0.5 * diff * diff;
        }
        out.targets[i] = std::log(std::max(acc / static_cast<double>(s), 1e-12));
    }
    return out;
}

} // namespace detail

// Samples come from the predictive distribution of an observation (latent
// posterior plus noise): with both z_i and z_i^j carrying independent noise,
// the 0.5 factor makes the estimator consistent for the noise variance.
Dataset empirical_noise(const GPModel& gp1, const Dataset& data, int s, std::uint64_t rng_seed) {
    data.validate();
    return detail::empirical_noise_from(
        [&](const ControlDecision& x) { return gp1.posterior_with_noise(x); }, data, s,
        rng_seed);
}

MLHGPModel MLHGPModel::combine(const GPModel& mean_gp, const GPModel& noise_gp) {
    MLHGPModel m;
    m.mean_gp_ = mean_gp;
    m.noise_gp_ = noise_gp;
    const Eigen::MatrixXd& X = mean_gp.data().inputs;
    const int n = static_cast<int>(X.rows());
    m.r_diag_.resize(n);
    for (int i = 0; i < n; ++i)
        m.r_diag_[i] = std::exp(noise_gp.posterior(X.row(i).transpose()).mean);

    const double s2 = mean_gp.target_scale() * mean_gp.target_scale();
    Eigen::MatrixXd A = kernel_matrix(X, mean_gp.hyperparams());
    A.diagonal() += m.r_diag_ / s2;
    auto chol = stormbo::detail::chol_with_jitter(A, "MLHGP combine");
    m.jitter_ = chol.jitter;
    m.L_ = std::move(chol.L);
    m.alpha_ = m.L_.triangularView<Eigen::Lower>().solve(mean_gp.standardized_targets());
    m.alpha_ = m.L_.transpose().triangularView<Eigen::Upper>().solve(m.alpha_);
    return m;
}

Prediction MLHGPModel::posterior_latent(const ControlDecision& x) const {
    const Hyperparams& h = mean_gp_.hyperparams();
    Eigen::VectorXd ks = kernel_vector(mean_gp_.data().inputs, x, h);
    Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(ks);
    const double scale = mean_gp_.target_scale();
    const double mean = mean_gp_.target_shift() + scale * ks.dot(alpha_);
    const double var_std = h.signal_variance - v.squaredNorm();
    return {mean, scale * scale * std::max(var_std, 0.0)};
}

double MLHGPModel::noise_variance_at(const ControlDecision& x) const {
    return std::exp(noise_gp_.posterior(x).mean);
}

Prediction MLHGPModel::posterior(const ControlDecision& x) const {
    Prediction p = posterior_latent(x);
    p.variance += noise_variance_at(x);
    return p;
}

Eigen::VectorXd MLHGPModel::posterior_mean_at_training() const {
    const Eigen::MatrixXd& X = mean_gp_.data().inputs;
    Eigen::VectorXd mean(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        mean[i] = posterior_latent(X.row(i).transpose()).mean;
    return mean;
}

MLHGPModel fit_mlhgp(const Dataset& data, int s, int max_iters, double tol,
                     std::uint64_t rng_seed) {
    data.validate();
    if (data.size() == 0) throw std::invalid_argument("fit_mlhgp: empty dataset");
    if (max_iters < 1) throw std::invalid_argument("fit_mlhgp: max_iters must be >= 1");
    if (s < 2) throw std::invalid_argument("fit_mlhgp: s must be >= 2");

    if (tol <= 0.0) {
        const double range = data.targets.maxCoeff() - data.targets.minCoeff();
        tol = range > 0.0 ? 1e-3 * range : 1e-12;
    }

    GPModel gp1 = GPModel::fit(data, default_init(data), 5, derive_seed(rng_seed, 1));
    Eigen::VectorXd prev_mean = gp1.posterior_mean_at_training();
    std::function<Prediction(const ControlDecision&)> sample_post =
        [&gp1](const ControlDecision& x) { return gp1.posterior_with_noise(x); };

    MLHGPModel model;
    for (int iter = 1; iter <= max_iters; ++iter) {
        Dataset noise_data =
            detail::empirical_noise_from(sample_post, data, s, derive_seed(rng_seed, 100 + iter));
        GPModel gp2 = GPModel::fit(noise_data, default_init(noise_data), 3,
                                   derive_seed(rng_seed, 200 + iter));
        model = MLHGPModel::combine(gp1, gp2);
        model.iterations_used_ = iter;
        model.tol_ = tol;

        Eigen::VectorXd new_mean = model.posterior_mean_at_training();
        model.final_delta_ = (new_mean - prev_mean).cwiseAbs().maxCoeff();
        prev_mean = new_mean;
        if (model.final_delta_ <= tol) {
            model.converged_ = true;
            break;
        }
        // Re-enter the noise-estimation step sampling from the latest
        // combined posterior (observation level, consistent with above).
        const MLHGPModel snapshot = model;
        sample_post = [snapshot](const ControlDecision& x) { return snapshot.posterior(x); };
    }
    return model;
}

Prediction mlhgp_posterior(const MLHGPModel& model, const ControlDecision& x) {
    return model.posterior(x);
}

} // namespace stormbo
