#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "metacond/errors.hpp"

namespace metacond {

struct OptimResult {
    Eigen::VectorXd x;         // best iterate seen
    double f = 0.0;            // objective at x (maximization convention)
    std::vector<double> trace; // objective value per iteration
    int iterations = 0;
};

/// Adam ascent on a differentiable objective. `fg` returns (value, gradient)
/// of the function to MAXIMIZE. The step size starts at `learning_rate` and
/// halves whenever the best value seen fails to improve by more than a
/// relative tol for `stall_window` iterations (constant-step Adam orbits the
/// optimum at a radius proportional to the step, so the schedule is what
/// turns it into an exact maximizer). Stops at max_iter, or when a stall is
/// hit with the step already at its floor; always returns the best iterate
/// seen. Throws NonFiniteObjective as soon as the objective stops being
/// finite.
template <class FG>
OptimResult adam_maximize(FG&& fg, Eigen::VectorXd x0, int max_iter, double learning_rate,
                          double tol = 1e-8, int stall_window = 100, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8) {
    const auto n = x0.size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    OptimResult res;
    res.x = x0;
    res.f = -std::numeric_limits<double>::infinity();
    int best_iter = 0;
    double lr = learning_rate;
    const double lr_floor = learning_rate * 0x1p-12;
    Eigen::VectorXd x = std::move(x0);
    for (int it = 0; it < max_iter; ++it) {
        auto [fx, g] = fg(x);
        if (!std::isfinite(fx))
            throw NonFiniteObjective(it, "adam: objective is not finite");
        res.trace.push_back(fx);
        res.iterations = it + 1;
        if (!std::isfinite(res.f) || fx > res.f + tol * (1.0 + std::abs(res.f))) best_iter = it;
        if (fx > res.f) {
            res.f = fx;
            res.x = x;
        }
        if (it - best_iter >= stall_window) {
            if (lr <= lr_floor) break;
            lr *= 0.5;
            best_iter = it;
        }

        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g).eval();
        const double bc1 = 1.0 - std::pow(beta1, it + 1);
        const double bc2 = 1.0 - std::pow(beta2, it + 1);
        x += lr * (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + eps).matrix()).eval();
    }
    return res;
}

/// Nelder-Mead simplex ascent on a (possibly non-smooth) objective to
/// MAXIMIZE, implemented as descent on -f with the standard reflection /
/// expansion / contraction / shrink coefficients (1, 2, 0.5, 0.5).
/// Candidate evaluations that come back NaN are treated as -inf (the simplex
/// moves away); the incumbent therefore stays finite provided the starting
/// point is, else NonFiniteObjective is thrown at iteration 0. Stops at
/// max_iter or when both the objective spread and the simplex diameter
/// collapse below tol.
template <class F>
OptimResult nelder_mead_maximize(F&& f, Eigen::VectorXd x0, int max_iter, double tol = 1e-10) {
    const auto n = x0.size();
    auto eval = [&](const Eigen::VectorXd& x) {
        const double fx = f(x);
        return std::isnan(fx) ? -std::numeric_limits<double>::infinity() : fx;
    };

    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n) + 1);
    std::vector<double> fs(static_cast<std::size_t>(n) + 1);
    xs[0] = x0;
    fs[0] = eval(x0);
    if (!std::isfinite(fs[0]))
        throw NonFiniteObjective(0, "nelder_mead: objective not finite at the starting point");
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd xi = x0;
        xi(i) += 0.05 * std::abs(x0(i)) + 0.05;
        xs[static_cast<std::size_t>(i) + 1] = xi;
        fs[static_cast<std::size_t>(i) + 1] = eval(xi);
    }

    std::vector<std::size_t> order(xs.size());
    OptimResult res;
    for (int it = 0; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fs[a] > fs[b]; });
        const std::size_t best = order.front(), worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];
        res.trace.push_back(fs[best]);
        res.iterations = it + 1;

        // Convergence: objective spread and simplex size both small.
        double diam = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            diam = std::max(diam, (xs[i] - xs[best]).cwiseAbs().maxCoeff());
        const bool f_flat =
            std::isfinite(fs[worst]) &&
            fs[best] - fs[worst] <= tol * (1.0 + std::abs(fs[best]));
        if (f_flat && diam <= std::sqrt(tol)) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < order.size() - 1; ++i) centroid += xs[order[i]];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
        const double fr = eval(xr);
        if (fr > fs[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
            const double fe = eval(xe);
            if (fe > fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr > fs[second_worst]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const bool outside = fr > fs[worst];
            const Eigen::VectorXd xc =
                outside ? (centroid + 0.5 * (centroid - xs[worst])).eval()
                        : (centroid - 0.5 * (centroid - xs[worst])).eval();
            const double fc = eval(xc);
            if ((outside && fc >= fr) || (!outside && fc > fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (std::size_t i = 1; i < order.size(); ++i) {
                    xs[order[i]] = xs[best] + 0.5 * (xs[order[i]] - xs[best]);
                    fs[order[i]] = eval(xs[order[i]]);
                }
            }
        }
    }

    const auto best_it = std::max_element(fs.begin(), fs.end()) - fs.begin();
    res.x = xs[static_cast<std::size_t>(best_it)];
    res.f = fs[static_cast<std::size_t>(best_it)];
    return res;
}

}  // namespace metacond
