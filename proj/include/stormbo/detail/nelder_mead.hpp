#ifndef STORMBO_DETAIL_NELDER_MEAD_HPP
#define STORMBO_DETAIL_NELDER_MEAD_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

namespace stormbo::detail {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
};

// Derivative-free local minimization (standard reflect/expand/contract/shrink
// coefficients). Deterministic for a given start.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0,
                                    double step,
                                    int max_iters = 200,
                                    double ftol = 1e-10) {
    const int d = static_cast<int>(x0.size());
    struct Vertex {
        Eigen::VectorXd x;
        double fx;
    };
    std::vector<Vertex> simplex;
    simplex.reserve(d + 1);
    simplex.push_back({x0, f(x0)});
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd xi = x0;
        xi[i] += step;
        simplex.push_back({xi, f(xi)});
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; };

    int iter = 0;
    for (; iter < max_iters; ++iter) {
        std::sort(simplex.begin(), simplex.end(), by_value);
        if (std::abs(simplex.back().fx - simplex.front().fx) <
            ftol * (1.0 + std::abs(simplex.front().fx))) {
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) centroid += simplex[i].x;
        centroid /= static_cast<double>(d);

        const Vertex& worst = simplex.back();
        Eigen::VectorXd xr = centroid + (centroid - worst.x);
        double fr = f(xr);
        if (fr < simplex.front().fx) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst.x);
            double fe = f(xe);
            simplex.back() = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < simplex[d - 1].fx) {
            simplex.back() = {xr, fr};
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (worst.x - centroid);
            double fc = f(xc);
            if (fc < worst.fx) {
                simplex.back() = {xc, fc};
            } else {
                for (int i = 1; i <= d; ++i) {
                    simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
                    simplex[i].fx = f(simplex[i].x);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    return {simplex.front().x, simplex.front().fx, iter};
}

} // namespace stormbo::detail

#endif
