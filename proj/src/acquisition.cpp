#include "stormbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stormbo/detail/nelder_mead.hpp"
#include "stormbo/rng.hpp"

namespace stormbo {

namespace {

double std_normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); }

double std_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

} // namespace

double expected_improvement(double mu, double sigma, double incumbent) {
    if (!(sigma >= 0.0))
        throw std::invalid_argument("expected_improvement: sigma must be >= 0");
    const double delta = mu - incumbent;
    if (sigma == 0.0) return std::max(delta, 0.0);
    const double u = delta / sigma;
    // E[(f - incumbent)^+] = [delta]^+ + sigma phi(u) - |delta| Phi(-|u|)
    const double ei =
        std::max(delta, 0.0) + sigma * std_normal_pdf(u) - std::abs(delta) * std_normal_cdf(-std::abs(u));
    return std::max(ei, 0.0);
}

double ei_for_minimization(const GPModel& model, const ControlDecision& x, double incumbent_min) {
    Prediction p = model.posterior(x);
    return expected_improvement(-p.mean, std::sqrt(std::max(p.variance, 0.0)), -incumbent_min);
}

ControlDecision maximize(const GPModel& model, const AcquisitionConfig& cfg,
                         std::uint64_t rng_seed) {
    const int d = model.dim();
    if (cfg.n_starts < 0 || cfg.grid_fallback < 0)
        throw std::invalid_argument("AcquisitionConfig: counts must be non-negative");
    const int n_starts = cfg.n_starts > 0 ? cfg.n_starts : 10 * d;

    const double incumbent =
        cfg.incumbent ? *cfg.incumbent : model.posterior_mean_at_training().minCoeff();

    auto clamp_box = [](Eigen::VectorXd x) {
        return x.cwiseMax(0.0).cwiseMin(1.0).eval();
    };
    auto ei_at = [&](const Eigen::VectorXd& x) {
        return ei_for_minimization(model, x, incumbent);
    };

    struct Candidate {
        Eigen::VectorXd x;
        double ei;
    };
    std::vector<Candidate> candidates;

    // Dense pre-scan for low-dimensional decision spaces.
    if (d <= 2 && cfg.grid_fallback >= 2) {
        const int g = cfg.grid_fallback;
        if (d == 1) {
            for (int i = 0; i < g; ++i) {
                Eigen::VectorXd x(1);
                x[0] = static_cast<double>(i) / (g - 1);
                candidates.push_back({x, ei_at(x)});
            }
        } else {
            for (int i = 0; i < g; ++i) {
                for (int j = 0; j < g; ++j) {
                    Eigen::VectorXd x(2);
                    x[0] = static_cast<double>(i) / (g - 1);
                    x[1] = static_cast<double>(j) / (g - 1);
                    candidates.push_back({x, ei_at(x)});
                }
            }
        }
    }

    // Multi-start local ascent; points outside the box are clamped for
    // evaluation and pushed back by a quadratic penalty.
    auto objective = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd xc = clamp_box(x);
        return -ei_at(xc) + 1e3 * (x - xc).squaredNorm();
    };
    Rng rng(derive_seed(rng_seed, 0xac0));
    std::vector<Eigen::VectorXd> starts;
    for (int s = 0; s < n_starts; ++s) {
        Eigen::VectorXd x(d);
        for (int k = 0; k < d; ++k) x[k] = rng.uniform();
        starts.push_back(x);
    }
    if (!candidates.empty()) {
        auto best_grid = std::max_element(
            candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.ei < b.ei; });
        starts.push_back(best_grid->x);
    }
    for (const auto& x0 : starts) {
        candidates.push_back({x0, ei_at(x0)});
        auto res = detail::nelder_mead(objective, x0, 0.08, 60, 1e-12);
        Eigen::VectorXd xr = clamp_box(res.x);
        candidates.push_back({xr, ei_at(xr)});
    }

    double best_ei = -1.0;
    for (const auto& c : candidates) best_ei = std::max(best_ei, c.ei);
    const Candidate* winner = nullptr;
    for (const auto& c : candidates) {
        if (c.ei >= best_ei - 1e-12) {
            if (winner == nullptr || lex_less(c.x, winner->x)) winner = &c;
        }
    }
    return winner->x;
}

} // namespace stormbo
