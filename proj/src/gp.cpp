#include "stormbo/gp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "stormbo/detail/nelder_mead.hpp"
#include "stormbo/rng.hpp"

namespace stormbo {

void Hyperparams::validate() const {
    if (!(signal_variance > 0.0))
        throw std::invalid_argument("Hyperparams: signal_variance must be > 0");
    if (!(lengthscale > 0.0))
        throw std::invalid_argument("Hyperparams: lengthscale must be > 0");
    if (!(noise_variance >= 0.0))
        throw std::invalid_argument("Hyperparams: noise_variance must be >= 0");
}

void Dataset::validate() const {
    if (inputs.rows() != targets.size())
        throw std::invalid_argument("Dataset: inputs and targets differ in length");
    if (!storm_ids.empty() && static_cast<Eigen::Index>(storm_ids.size()) != targets.size())
        throw std::invalid_argument("Dataset: storm_ids length mismatch");
    for (Eigen::Index i = 0; i < inputs.rows(); ++i)
        require_unit_box(inputs.row(i).transpose(), "Dataset");
}

double kernel_se(const ControlDecision& x, const ControlDecision& x2, const Hyperparams& h) {
    if (x.size() != x2.size())
        throw std::invalid_argument("kernel_se: dimension mismatch");
    h.validate();
    const double d2 = (x - x2).squaredNorm();
    return h.signal_variance * std::exp(-d2 / (2.0 * h.lengthscale * h.lengthscale));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Hyperparams& h) {
    const Eigen::Index n = X.rows();
    Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                         2.0 * (X * X.transpose());
    d2 = d2.cwiseMax(0.0);
    return h.signal_variance *
           (-d2 / (2.0 * h.lengthscale * h.lengthscale)).array().exp().matrix();
}

Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& X, const ControlDecision& x,
                              const Hyperparams& h) {
    if (X.cols() != x.size())
        throw std::invalid_argument("kernel_vector: dimension mismatch");
    Eigen::VectorXd d2 = (X.rowwise() - x.transpose()).rowwise().squaredNorm();
    return h.signal_variance *
           (-d2 / (2.0 * h.lengthscale * h.lengthscale)).array().exp().matrix();
}

namespace detail {

CholJitter chol_with_jitter(const Eigen::MatrixXd& A, const char* context) {
    for (double jitter = 1e-10; jitter <= 1.0001e-4; jitter *= 10.0) {
        Eigen::MatrixXd Aj = A;
        Aj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(Aj);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd L = llt.matrixL();
            if (L.allFinite()) return {std::move(L), jitter};
        }
    }
    std::ostringstream msg;
    msg << "Cholesky failed after jitter escalation to 1e-4 (" << context << ")";
    throw NumericalError(msg.str());
}

double lml_from_chol(const Eigen::MatrixXd& L, const Eigen::VectorXd& z) {
    const Eigen::Index n = z.size();
    Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(z);
    const double log_det = L.diagonal().array().log().sum();
    return -0.5 * v.squaredNorm() - log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

} // namespace detail

double log_marginal_likelihood(const Dataset& data, const Hyperparams& h) {
    data.validate();
    h.validate();
    if (data.size() == 0)
        throw std::invalid_argument("log_marginal_likelihood: empty dataset");
    Eigen::MatrixXd Kz = kernel_matrix(data.inputs, h);
    Kz.diagonal().array() += h.noise_variance;
    std::ostringstream ctx;
    ctx << "lml at sv=" << h.signal_variance << " l=" << h.lengthscale
        << " nv=" << h.noise_variance;
    auto chol = detail::chol_with_jitter(Kz, ctx.str().c_str());
    return detail::lml_from_chol(chol.L, data.targets);
}

namespace {

struct Standardization {
    double shift;
    double scale;
};

Standardization standardize(const Eigen::VectorXd& z) {
    const double shift = z.mean();
    const double var = (z.array() - shift).square().sum() / static_cast<double>(z.size());
    const double scale = var > 1e-300 ? std::sqrt(var) : 1.0;
    return {shift, scale};
}

// Search box for the log-transformed hyperparameters (standardized target
// space, so var(z) = 1). The box equals the restart sampling ranges: letting
// the noise variance collapse further turns exactly-repeated observations
// into an unbounded likelihood pump and the fit degenerates into an
// interpolator.
struct LogBox {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
};

LogBox search_box(int dim) {
    const double sqd = std::sqrt(static_cast<double>(dim));
    LogBox b;
    b.lo << std::log(1e-3), std::log(1e-2 * sqd), std::log(1e-6);
    b.hi << std::log(1e3), std::log(2.0 * sqd), std::log(1.0);
    return b;
}

Hyperparams from_log(const Eigen::VectorXd& u) {
    return {std::exp(u[0]), std::exp(u[1]), std::exp(u[2])};
}

} // namespace

void GPModel::factorize() {
    Eigen::MatrixXd Kz = kernel_matrix(data_.inputs, hp_);
    Kz.diagonal().array() += hp_.noise_variance;
    std::ostringstream ctx;
    ctx << "GP factorization at sv=" << hp_.signal_variance << " l=" << hp_.lengthscale
        << " nv=" << hp_.noise_variance;
    auto chol = detail::chol_with_jitter(Kz, ctx.str().c_str());
    L_ = std::move(chol.L);
    jitter_ = chol.jitter;
    alpha_ = L_.triangularView<Eigen::Lower>().solve(z_std_);
    alpha_ = L_.transpose().triangularView<Eigen::Upper>().solve(alpha_);
    lml_ = detail::lml_from_chol(L_, z_std_);
}

GPModel GPModel::with_hyperparams(const Dataset& data, const Hyperparams& raw) {
    data.validate();
    raw.validate();
    if (data.size() == 0)
        throw std::invalid_argument("GPModel: empty dataset");
    GPModel m;
    m.data_ = data;
    auto st = standardize(data.targets);
    m.shift_ = st.shift;
    m.scale_ = st.scale;
    m.z_std_ = (data.targets.array() - st.shift).matrix() / st.scale;
    const double s2 = st.scale * st.scale;
    m.hp_ = {raw.signal_variance / s2, raw.lengthscale, raw.noise_variance / s2};
    m.factorize();
    return m;
}

GPModel GPModel::fit(const Dataset& data, const Hyperparams& init, int restarts,
                     std::uint64_t seed) {
    data.validate();
    init.validate();
    if (data.size() == 0)
        throw std::invalid_argument("GPModel::fit: empty dataset");
    if (restarts < 1)
        throw std::invalid_argument("GPModel::fit: restarts must be >= 1");

    const int n = data.size();
    const int d = data.dim();
    auto st = standardize(data.targets);
    const double s2 = st.scale * st.scale;
    Eigen::VectorXd zs = (data.targets.array() - st.shift).matrix() / st.scale;

    // Pairwise squared distances are reused across all likelihood evaluations.
    Eigen::VectorXd sq = data.inputs.rowwise().squaredNorm();
    Eigen::MatrixXd D2 = sq.replicate(1, n) + sq.transpose().replicate(n, 1) -
                         2.0 * (data.inputs * data.inputs.transpose());
    D2 = D2.cwiseMax(0.0);

    auto lml_at = [&](const Hyperparams& h) -> double {
        Eigen::MatrixXd Kz =
            h.signal_variance *
            (-D2 / (2.0 * h.lengthscale * h.lengthscale)).array().exp().matrix();
        Kz.diagonal().array() += h.noise_variance;
        try {
            auto chol = detail::chol_with_jitter(Kz, "fit");
            return detail::lml_from_chol(chol.L, zs);
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    const LogBox box = search_box(d);
    auto objective = [&](const Eigen::VectorXd& u) -> double {
        Eigen::Vector3d uc = u.cwiseMax(box.lo).cwiseMin(box.hi);
        const double excess = (u - Eigen::VectorXd(uc)).squaredNorm();
        return -lml_at(from_log(uc)) + 1e4 * excess;
    };

    // Candidate starts: the caller's init (standardized) plus log-uniform
    // random draws over sigma^2 in [1e-3,1e3], l in [1e-2,2]*sqrt(d),
    // sigma_n^2 in [1e-6,1].
    const Hyperparams init_std{init.signal_variance / s2, init.lengthscale,
                               std::max(init.noise_variance / s2, 1e-12)};
    std::vector<Eigen::Vector3d> starts;
    {
        Eigen::Vector3d u0;
        u0 << std::log(init_std.signal_variance), std::log(init_std.lengthscale),
            std::log(init_std.noise_variance);
        starts.push_back(u0.cwiseMax(box.lo).cwiseMin(box.hi));
    }
    Rng rng(derive_seed(seed, 0xf17));
    const double sqd = std::sqrt(static_cast<double>(d));
    for (int r = 0; r < restarts; ++r) {
        Eigen::Vector3d u;
        u[0] = rng.uniform(std::log(1e-3), std::log(1e3));
        u[1] = rng.uniform(std::log(1e-2 * sqd), std::log(2.0 * sqd));
        u[2] = rng.uniform(std::log(1e-6), std::log(1.0));
        starts.push_back(u);
    }

    double best_lml = lml_at(init_std);
    Hyperparams best = init_std;
    for (const auto& u0 : starts) {
        auto res = detail::nelder_mead(objective, u0, 0.7, 150, 1e-10);
        Eigen::Vector3d uc = res.x.cwiseMax(box.lo).cwiseMin(box.hi);
        const Hyperparams cand = from_log(uc);
        const double cand_lml = lml_at(cand);
        if (cand_lml > best_lml) {
            best_lml = cand_lml;
            best = cand;
        }
    }

    GPModel m;
    m.data_ = data;
    m.shift_ = st.shift;
    m.scale_ = st.scale;
    m.z_std_ = std::move(zs);
    m.hp_ = best;
    m.factorize();
    return m;
}

Hyperparams GPModel::raw_hyperparams() const {
    const double s2 = scale_ * scale_;
    return {hp_.signal_variance * s2, hp_.lengthscale, hp_.noise_variance * s2};
}

Prediction GPModel::posterior(const ControlDecision& x) const {
    if (x.size() != data_.inputs.cols())
        throw std::invalid_argument("GPModel::posterior: dimension mismatch");
    Eigen::VectorXd ks = kernel_vector(data_.inputs, x, hp_);
    Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(ks);
    const double mean = shift_ + scale_ * ks.dot(alpha_);
    const double var_std = hp_.signal_variance - v.squaredNorm();
    return {mean, scale_ * scale_ * std::max(var_std, 0.0)};
}

Prediction GPModel::posterior_with_noise(const ControlDecision& x) const {
    Prediction p = posterior(x);
    p.variance += scale_ * scale_ * hp_.noise_variance;
    return p;
}

void GPModel::posterior(const Eigen::MatrixXd& Xq, Eigen::VectorXd& mean,
                        Eigen::VectorXd& variance) const {
    const Eigen::Index m = Xq.rows();
    mean.resize(m);
    variance.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        Prediction p = posterior(Xq.row(i).transpose());
        mean[i] = p.mean;
        variance[i] = p.variance;
    }
}

Eigen::VectorXd GPModel::posterior_mean_at_training() const {
    Eigen::VectorXd mean, var;
    posterior(data_.inputs, mean, var);
    return mean;
}

Hyperparams default_init(const Dataset& data) {
    data.validate();
    const double mean = data.targets.mean();
    const double var =
        (data.targets.array() - mean).square().sum() / std::max(1, data.size());
    const double sv = var > 1e-300 ? var : 1.0;
    const double l = 0.5 * std::sqrt(static_cast<double>(std::max(1, data.dim())));
    return {sv, l, 1e-4 * sv};
}

} // namespace stormbo
