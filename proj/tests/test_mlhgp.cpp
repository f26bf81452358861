#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "stormbo/mlhgp.hpp"
#include "stormbo/rng.hpp"

using namespace stormbo;

namespace {

ControlDecision vec1(double x) {
    ControlDecision v(1);
    v[0] = x;
    return v;
}

// y = sin(2 pi x) + noise, noise std chosen per point by `noise_of`.
template <typename F>
Dataset noisy_sine(int n, std::uint64_t seed, F noise_of) {
    Rng rng(seed);
    Dataset ds;
    ds.inputs.resize(n, 1);
    ds.targets.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) / n;
        ds.inputs(i, 0) = x;
        ds.targets[i] = std::sin(2.0 * M_PI * x) + noise_of(x) * rng.normal();
    }
    return ds;
}

} // namespace

TEST_CASE("empirical noise: zero posterior variance hits the log clamp") {
    Dataset ds;
    ds.inputs = Eigen::MatrixXd::Constant(3, 1, 0.0);
    ds.inputs << 0.1, 0.5, 0.9;
    ds.targets.resize(3);
    ds.targets << 1.0, -1.0, 2.0;
    // posterior that reproduces each observation exactly with zero variance
    auto post = [&](const ControlDecision& x) -> Prediction {
        for (int i = 0; i < 3; ++i)
            if (x[0] == ds.inputs(i, 0)) return {ds.targets[i], 0.0};
        return {0.0, 0.0};
    };
    Dataset nd = detail::empirical_noise_from(post, ds, 50, 1);
    for (int i = 0; i < 3; ++i)
        CHECK(nd.targets[i] == doctest::Approx(std::log(1e-12)).epsilon(1e-12));
}

TEST_CASE("empirical noise: standard normal residuals give log(1/2)") {
    Dataset ds;
    ds.inputs = Eigen::MatrixXd::Constant(1, 1, 0.5);
    ds.targets = Eigen::VectorXd::Zero(1);
    auto post = [](const ControlDecision&) -> Prediction { return {0.0, 1.0}; };
    Dataset nd = detail::empirical_noise_from(post, ds, 100000, 77);
    // E[0.5 (0 - N(0,1))^2] = 0.5
    CHECK(std::abs(nd.targets[0] - std::log(0.5)) <= 0.02);
}

TEST_CASE("empirical noise: quadratic in the residual when the variance vanishes") {
    Dataset ds;
    ds.inputs = Eigen::MatrixXd::Constant(1, 1, 0.5);
    ds.targets = Eigen::VectorXd::Constant(1, 0.3);
    auto post = [](const ControlDecision&) -> Prediction { return {0.0, 0.0}; };
    Dataset nd1 = detail::empirical_noise_from(post, ds, 10, 5);
    ds.targets[0] = 0.6;  // double the residual
    Dataset nd2 = detail::empirical_noise_from(post, ds, 10, 5);
    CHECK(std::exp(nd2.targets[0]) ==
          doctest::Approx(4.0 * std::exp(nd1.targets[0])).epsilon(1e-9));
}

TEST_CASE("empirical noise: deterministic given the seed, via the public op") {
    Dataset ds = noisy_sine(20, 3, [](double) { return 0.1; });
    GPModel gp1 = GPModel::fit(ds, default_init(ds), 3, 11);
    Dataset a = empirical_noise(gp1, ds, 200, 21);
    Dataset b = empirical_noise(gp1, ds, 200, 21);
    CHECK((a.targets - b.targets).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.inputs == ds.inputs);
}

TEST_CASE("combine: constant noise GP degenerates to the homoscedastic posterior") {
    Rng rng(31);
    Dataset ds;
    ds.inputs.resize(6, 1);
    ds.targets.resize(6);
    for (int i = 0; i < 6; ++i) {
        ds.inputs(i, 0) = (i + 0.4) / 6.0;
        ds.targets[i] = rng.normal();
    }
    const double nv = 0.04;
    const Hyperparams h{1.5, 0.25, nv};
    GPModel mean_gp = GPModel::with_hyperparams(ds, h);

    Dataset noise_ds;
    noise_ds.inputs = ds.inputs;
    noise_ds.targets = Eigen::VectorXd::Constant(6, std::log(nv));
    GPModel noise_gp = GPModel::with_hyperparams(noise_ds, {1.0, 0.3, 1e-6});

    MLHGPModel combined = MLHGPModel::combine(mean_gp, noise_gp);
    GPModel plain = GPModel::with_hyperparams(ds, h);
    for (double xq : {0.0, 0.21, 0.5, 0.77, 1.0}) {
        const Prediction pc = combined.posterior(vec1(xq));
        const Prediction pp = plain.posterior(vec1(xq));
        CHECK(pc.mean == doctest::Approx(pp.mean).epsilon(1e-10));
        CHECK(pc.variance == doctest::Approx(pp.variance + nv).epsilon(1e-10));
    }
}

TEST_CASE("combine: dense-inversion oracle of the heteroscedastic posterior") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(4));
        Dataset ds;
        ds.inputs.resize(n, 1);
        ds.targets.resize(n);
        for (int i = 0; i < n; ++i) {
            ds.inputs(i, 0) = (i + 0.5) / n;
            ds.targets[i] = rng.normal() * 3.0;
        }
        GPModel mean_gp = GPModel::with_hyperparams(ds, {2.0, 0.3, 0.01});

        Dataset noise_ds;
        noise_ds.inputs = ds.inputs;
        noise_ds.targets.resize(n);
        for (int i = 0; i < n; ++i) noise_ds.targets[i] = rng.uniform(-6.0, -1.0);
        GPModel noise_gp = GPModel::fit(noise_ds, default_init(noise_ds), 2, trial);

        MLHGPModel combined = MLHGPModel::combine(mean_gp, noise_gp);

        // the same posterior by direct dense inversion in the standardized space
        const auto& h = mean_gp.hyperparams();
        const double scale = mean_gp.target_scale();
        Eigen::MatrixXd A = kernel_matrix(ds.inputs, h);
        A.diagonal() += combined.r_diag() / (scale * scale);
        A.diagonal().array() += combined.jitter();
        const Eigen::MatrixXd Ainv = A.inverse();

        for (double xq : {0.05, 0.4, 0.9}) {
            Eigen::VectorXd ks = kernel_vector(ds.inputs, vec1(xq), h);
            const double mean_std = ks.dot(Ainv * mean_gp.standardized_targets());
            const double var_std = h.signal_variance - ks.dot(Ainv * ks);
            const double want_mean = mean_gp.target_shift() + scale * mean_std;
            const double want_var = scale * scale * std::max(var_std, 0.0) +
                                    std::exp(noise_gp.posterior(vec1(xq)).mean);
            const Prediction got = mlhgp_posterior(combined, vec1(xq));
            CHECK(got.mean == doctest::Approx(want_mean).epsilon(1e-10));
            CHECK(got.variance == doctest::Approx(want_var).epsilon(1e-10));
        }
    }
}

TEST_CASE("combine: far from data the variance approaches signal + noise prior") {
    Dataset ds;
    ds.inputs.resize(3, 1);
    ds.inputs << 0.0, 0.02, 0.05;
    ds.targets.resize(3);
    ds.targets << 0.5, 0.4, 0.6;
    GPModel mean_gp = GPModel::with_hyperparams(ds, {2.0, 0.04, 0.01});
    Dataset noise_ds;
    noise_ds.inputs = ds.inputs;
    noise_ds.targets = Eigen::VectorXd::Constant(3, std::log(0.09));
    GPModel noise_gp = GPModel::with_hyperparams(noise_ds, {1.0, 0.1, 1e-6});
    MLHGPModel combined = MLHGPModel::combine(mean_gp, noise_gp);

    const double sv_raw = mean_gp.raw_hyperparams().signal_variance;
    const Prediction p = combined.posterior(vec1(1.0));
    const double r_far = combined.noise_variance_at(vec1(1.0));
    CHECK(std::abs(p.variance - (sv_raw + r_far)) <= 1e-3 * sv_raw);
    CHECK(r_far > 0.0);
}

TEST_CASE("fit_mlhgp: max_iters=1 is exactly one combine of its parts") {
    Dataset ds = noisy_sine(30, 7, [](double x) { return x < 0.5 ? 0.05 : 0.2; });
    MLHGPModel m = fit_mlhgp(ds, 50, 1, -1.0, 99);
    CHECK(m.iterations_used() == 1);
    MLHGPModel recombined = MLHGPModel::combine(m.mean_gp(), m.noise_gp());
    for (double xq : {0.1, 0.5, 0.85}) {
        CHECK(m.posterior(vec1(xq)).mean == recombined.posterior(vec1(xq)).mean);
        CHECK(m.posterior(vec1(xq)).variance == recombined.posterior(vec1(xq)).variance);
    }
    CHECK(m.converged() == (m.final_delta() <= m.tolerance()));
}

TEST_CASE("fit_mlhgp: r_diag matches the noise GP and stays positive") {
    Dataset ds = noisy_sine(25, 17, [](double) { return 0.1; });
    MLHGPModel m = fit_mlhgp(ds, 60, 3, -1.0, 7);
    for (int i = 0; i < ds.size(); ++i) {
        const double want = std::exp(m.noise_gp().posterior(ds.inputs.row(i).transpose()).mean);
        CHECK(m.r_diag()[i] == doctest::Approx(want).epsilon(1e-10));
        CHECK(m.r_diag()[i] > 0.0);
    }
    // observation-level variance can never undercut the noise floor
    for (double xq : {0.0, 0.3, 0.6, 1.0}) {
        const Prediction p = m.posterior(vec1(xq));
        CHECK(p.variance >= m.noise_variance_at(vec1(xq)) - 1e-10);
    }
}

TEST_CASE("fit_mlhgp: recovers a constant noise level within a factor of 3") {
    std::vector<double> medians;
    for (int rep = 0; rep < 10; ++rep) {
        Dataset ds = noisy_sine(60, 1000 + rep, [](double) { return 0.1; });
        MLHGPModel m = fit_mlhgp(ds, 100, 5, -1.0, 500 + rep);
        std::vector<double> r;
        for (int g = 0; g <= 40; ++g)
            r.push_back(m.noise_variance_at(vec1(g / 40.0)));
        std::sort(r.begin(), r.end());
        medians.push_back(r[r.size() / 2]);

        // On homoscedastic data the MLH-GP mean tracks the plain GP mean.
        GPModel plain = GPModel::fit(ds, default_init(ds), 3, 600 + rep);
        int within = 0;
        for (int g = 0; g <= 40; ++g) {
            const Prediction pm = m.posterior_latent(vec1(g / 40.0));
            const Prediction pp = plain.posterior(vec1(g / 40.0));
            if (std::abs(pm.mean - pp.mean) <=
                2.0 * std::sqrt(std::max(pp.variance, 1e-30)) + 1e-9)
                ++within;
        }
        CHECK(within >= 39);  // 95% of 41 grid points
    }
    std::sort(medians.begin(), medians.end());
    const double med = medians[medians.size() / 2];
    CHECK(med >= 0.01 / 3.0);
    CHECK(med <= 0.01 * 3.0);
}

TEST_CASE("fit_mlhgp: orders a two-level noise profile correctly") {
    Dataset ds = noisy_sine(120, 4242, [](double x) { return x < 0.5 ? 0.01 : 0.2; });
    MLHGPModel m = fit_mlhgp(ds, 100, 5, -1.0, 31337);
    const double split_std = std::sqrt(0.01 * 0.2);  // geometric midpoint
    int correct = 0, total = 0;
    for (int g = 0; g <= 100; ++g) {
        const double x = g / 100.0;
        const double pred_std = std::sqrt(m.noise_variance_at(vec1(x)));
        ++total;
        if (x < 0.5 ? pred_std < split_std : pred_std > split_std) ++correct;
    }
    CHECK(correct >= static_cast<int>(0.9 * total));
}
