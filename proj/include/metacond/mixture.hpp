#pragma once

#include <Eigen/Dense>
#include <iostream>
#include <numeric>
#include <tuple>
#include <utility>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/gaussian.hpp"
#include "metacond/math.hpp"
#include "metacond/rng.hpp"

namespace metacond {

/// Finite Gaussian mixture.
struct Mixture {
    std::vector<double> weights;
    std::vector<GaussianParams> components;

    int dim() const { return components.empty() ? 0 : components.front().dim(); }
    int n_components() const { return static_cast<int>(components.size()); }
};

/// EM settings. `ridge` is relative: the effective diagonal ridge added to
/// every M-step covariance is ridge * trace(S)/d, where S is the sample
/// covariance of the full data set (so the regularization is scale-free).
struct EmConfig {
    int max_iter = 200;
    double rel_tol = 1e-8;
    int n_restarts = 5;
    enum class Init { farthest_point, random_responsibilities };
    Init init = Init::farthest_point;
    double ridge = 1e-9;
};

/// Per-component log marginal weights at x restricted to `idx`:
/// log w_k + log N(x; mu_k[idx], S_k[idx,idx]).
inline std::vector<double> mixture_log_weights_at(const Mixture& mix, const std::vector<int>& idx,
                                                  const Eigen::VectorXd& x) {
    std::vector<double> lw(static_cast<std::size_t>(mix.n_components()));
    for (int k = 0; k < mix.n_components(); ++k) {
        const auto& c = mix.components[static_cast<std::size_t>(k)];
        const GaussianParams marg{detail::select(c.mean, idx), detail::select(c.cov, idx, idx)};
        lw[static_cast<std::size_t>(k)] =
            std::log(mix.weights[static_cast<std::size_t>(k)]) + mvn_logpdf(x, marg);
    }
    return lw;
}

inline double mixture_logpdf(const Eigen::VectorXd& x, const Mixture& mix) {
    std::vector<double> lw(static_cast<std::size_t>(mix.n_components()));
    for (int k = 0; k < mix.n_components(); ++k)
        lw[static_cast<std::size_t>(k)] =
            std::log(mix.weights[static_cast<std::size_t>(k)]) +
            mvn_logpdf(x, mix.components[static_cast<std::size_t>(k)]);
    return log_sum_exp(lw);
}

/// Conditional mixture: each component is conditioned analytically and the
/// weights are re-tilted by the components' marginal density at the observed
/// values, w_k' = w_k f_k(x_given) / sum_j w_j f_j(x_given), computed in log
/// space. Throws DegenerateConditioning when every component underflows.
inline Mixture mixture_condition(const Mixture& mix, const IndexSplit& split,
                                 const Eigen::VectorXd& x_given) {
    check_split(split, mix.dim());
    std::vector<double> lw = mixture_log_weights_at(mix, split.given, x_given);
    const double total = log_sum_exp(lw);
    if (!std::isfinite(total))
        throw DegenerateConditioning(
            "mixture_condition: every component's marginal density underflowed at the "
            "conditioning point");
    Mixture out;
    out.weights.resize(lw.size());
    out.components.reserve(lw.size());
    for (std::size_t k = 0; k < lw.size(); ++k) {
        out.weights[k] = std::exp(lw[k] - total);
        out.components.push_back(
            gaussian_condition(mix.components[k], split, x_given));
    }
    return out;
}

inline Mixture mixture_marginalize(const Mixture& mix, const std::vector<int>& keep) {
    Mixture out;
    out.weights = mix.weights;
    out.components.reserve(mix.components.size());
    for (const auto& c : mix.components) out.components.push_back(gaussian_marginalize(c, keep));
    return out;
}

/// n draws, one per row: pick a component, then draw from it. Cholesky
/// factors are computed once per component.
inline Eigen::MatrixXd mixture_sample(const Mixture& mix, int n, Rng& rng) {
    const int d = mix.dim();
    std::vector<Eigen::MatrixXd> chols;
    chols.reserve(mix.components.size());
    for (const auto& c : mix.components) chols.push_back(cholesky(c.cov));
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n; ++i) {
        const std::size_t k = rng.categorical(mix.weights);
        for (int j = 0; j < d; ++j) z(j) = rng.normal();
        out.row(i) = (mix.components[k].mean + chols[k] * z).transpose();
    }
    return out;
}

namespace detail {

/// One EM sweep: E-step responsibilities under `mix` (in log space), M-step
/// re-estimates. Returns the updated mixture together with the data
/// log-likelihood *at the input parameters*.
struct EmSweep {
    Mixture updated;
    double loglik;
};

inline EmSweep em_sweep(const Eigen::MatrixXd& data, const Mixture& mix, double ridge_eff) {
    const auto n = data.rows();
    const int d = static_cast<int>(data.cols());
    const int K = mix.n_components();

    std::vector<Eigen::MatrixXd> chols(static_cast<std::size_t>(K));
    std::vector<double> log_det(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        try {
            chols[static_cast<std::size_t>(k)] =
                cholesky(mix.components[static_cast<std::size_t>(k)].cov);
        } catch (const NotPositiveDefinite& e) {
            throw SingularComponent("em_fit: component " + std::to_string(k) +
                                    " covariance is singular (" + e.what() + ")");
        }
        log_det[static_cast<std::size_t>(k)] =
            2.0 * chols[static_cast<std::size_t>(k)].diagonal().array().log().sum();
    }

    Eigen::MatrixXd log_r(n, K);
    Eigen::VectorXd y(d);
    double loglik = 0.0;
    std::vector<double> row(static_cast<std::size_t>(K));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < K; ++k) {
            const auto& c = mix.components[static_cast<std::size_t>(k)];
            y = chols[static_cast<std::size_t>(k)].triangularView<Eigen::Lower>().solve(
                data.row(i).transpose() - c.mean);
            row[static_cast<std::size_t>(k)] =
                std::log(mix.weights[static_cast<std::size_t>(k)]) -
                0.5 * (d * log_2pi + log_det[static_cast<std::size_t>(k)] + y.squaredNorm());
        }
        const double tot = log_sum_exp(row);
        loglik += tot;
        for (int k = 0; k < K; ++k) log_r(i, k) = row[static_cast<std::size_t>(k)] - tot;
    }

    Mixture out;
    out.weights.resize(static_cast<std::size_t>(K));
    out.components.resize(static_cast<std::size_t>(K));
    const Eigen::MatrixXd resp = log_r.array().exp();
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd r = resp.col(k);
        const double nk = r.sum();
        if (!(nk > 1e-10))
            throw EmptyComponent("em_fit: component " + std::to_string(k) +
                                 " lost all responsibility mass");
        const Eigen::VectorXd mu = (data.transpose() * r) / nk;
        Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
        Eigen::MatrixXd cov =
            (centered.transpose() * (centered.array().colwise() * r.array()).matrix()) / nk;
        cov = 0.5 * (cov + cov.transpose()).eval();
        cov.diagonal().array() += ridge_eff;
        out.weights[static_cast<std::size_t>(k)] = nk / static_cast<double>(n);
        out.components[static_cast<std::size_t>(k)] = GaussianParams{mu, std::move(cov)};
    }
    return EmSweep{std::move(out), loglik};
}

inline double total_loglik(const Eigen::MatrixXd& data, const Mixture& mix) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        s += mixture_logpdf(data.row(i).transpose(), mix);
    return s;
}

/// Farthest-point seeding: first center random, each next center is the data
/// point maximizing the distance to its nearest chosen center.
inline std::vector<Eigen::Index> farthest_point_centers(const Eigen::MatrixXd& data, int K,
                                                        Rng& rng) {
    const auto n = data.rows();
    std::vector<Eigen::Index> centers;
    centers.reserve(static_cast<std::size_t>(K));
    centers.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    Eigen::VectorXd min_d2 =
        (data.rowwise() - data.row(centers[0])).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
        Eigen::Index best = 0;
        min_d2.maxCoeff(&best);
        centers.push_back(best);
        min_d2 = min_d2.cwiseMin(
            (data.rowwise() - data.row(best)).rowwise().squaredNorm());
    }
    return centers;
}

}  // namespace detail

/// Maximum-likelihood fit of a K-component mixture by EM with restarts.
/// Restarts draw independent sub-streams from `rng` up front, so the result
/// is reproducible for a given seed. Returns the best restart's mixture and
/// its final data log-likelihood; `trace` (optional) receives the winning
/// restart's per-iteration log-likelihoods. Throws SingularComponent /
/// EmptyComponent only if every restart fails.
inline std::pair<Mixture, double> em_fit(const Eigen::MatrixXd& data, int K, const EmConfig& cfg,
                                         Rng& rng, std::vector<double>* trace = nullptr) {
    const auto n = data.rows();
    const int d = static_cast<int>(data.cols());
    if (K < 1) throw UnsupportedShape("em_fit: K must be >= 1");
    if (n < K) throw UnsupportedShape("em_fit: need at least K rows");
    if (n <= static_cast<Eigen::Index>(K) * d)
        std::cerr << "warning: em_fit called with n=" << n << " <= K*d=" << K * d
                  << "; the fit is likely degenerate\n";

    const Eigen::RowVectorXd col_mean = data.colwise().mean();
    const double trace_s =
        (data.rowwise() - col_mean).array().square().colwise().mean().sum();
    const double ridge_eff = cfg.ridge * trace_s / d;
    const Eigen::MatrixXd global_cov = [&] {
        Eigen::MatrixXd centered = data.rowwise() - col_mean;
        Eigen::MatrixXd s = (centered.transpose() * centered) / static_cast<double>(n);
        s.diagonal().array() += ridge_eff;
        return s;
    }();

    auto run_restart = [&](Rng r) {
        // Initial parameters.
        Mixture mix;
        mix.weights.assign(static_cast<std::size_t>(K), 1.0 / K);
        mix.components.resize(static_cast<std::size_t>(K));
        if (cfg.init == EmConfig::Init::farthest_point) {
            const auto centers = detail::farthest_point_centers(data, K, r);
            // Hard-assign to the nearest center, then a plain M-step.
            std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(K));
            for (Eigen::Index i = 0; i < n; ++i) {
                int best = 0;
                double best_d2 = (data.row(i) - data.row(centers[0])).squaredNorm();
                for (int k = 1; k < K; ++k) {
                    const double d2 =
                        (data.row(i) - data.row(centers[static_cast<std::size_t>(k)])).squaredNorm();
                    if (d2 < best_d2) best = k, best_d2 = d2;
                }
                members[static_cast<std::size_t>(best)].push_back(i);
            }
            for (int k = 0; k < K; ++k) {
                const auto& m = members[static_cast<std::size_t>(k)];
                if (m.size() < 2) {
                    // Degenerate cluster: fall back to the global covariance
                    // around the chosen center.
                    mix.components[static_cast<std::size_t>(k)] =
                        GaussianParams{data.row(centers[static_cast<std::size_t>(k)]).transpose(),
                                       global_cov};
                    mix.weights[static_cast<std::size_t>(k)] = 1.0 / n;
                    continue;
                }
                Eigen::MatrixXd sub(static_cast<Eigen::Index>(m.size()), d);
                for (std::size_t i = 0; i < m.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = data.row(m[i]);
                const Eigen::RowVectorXd mu = sub.colwise().mean();
                Eigen::MatrixXd centered = sub.rowwise() - mu;
                Eigen::MatrixXd cov =
                    (centered.transpose() * centered) / static_cast<double>(m.size());
                cov.diagonal().array() += ridge_eff + 1e-12 * std::max(1.0, trace_s / d);
                mix.weights[static_cast<std::size_t>(k)] =
                    static_cast<double>(m.size()) / static_cast<double>(n);
                mix.components[static_cast<std::size_t>(k)] =
                    GaussianParams{mu.transpose(), std::move(cov)};
            }
            const double wsum =
                std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
            for (auto& w : mix.weights) w /= wsum;
        } else {
            // Random responsibilities, then one M-step.
            Eigen::MatrixXd resp(n, K);
            for (Eigen::Index i = 0; i < n; ++i) {
                double s = 0.0;
                for (int k = 0; k < K; ++k) s += (resp(i, k) = r.uniform());
                resp.row(i) /= s;
            }
            for (int k = 0; k < K; ++k) {
                const Eigen::VectorXd rk = resp.col(k);
                const double nk = rk.sum();
                const Eigen::VectorXd mu = (data.transpose() * rk) / nk;
                Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
                Eigen::MatrixXd cov =
                    (centered.transpose() * (centered.array().colwise() * rk.array()).matrix()) /
                    nk;
                cov = 0.5 * (cov + cov.transpose()).eval();
                cov.diagonal().array() += ridge_eff + 1e-12 * std::max(1.0, trace_s / d);
                mix.weights[static_cast<std::size_t>(k)] = nk / static_cast<double>(n);
                mix.components[static_cast<std::size_t>(k)] = GaussianParams{mu, std::move(cov)};
            }
        }

        // EM iterations. em_sweep reports the log-likelihood at the current
        // parameters, so convergence and the monotonicity assertion both work
        // off that sequence.
        std::vector<double> ll_trace;
        double prev = -std::numeric_limits<double>::infinity();
        for (int it = 0; it < cfg.max_iter; ++it) {
            detail::EmSweep sweep = detail::em_sweep(data, mix, ridge_eff);
            if (!std::isfinite(sweep.loglik))
                throw NonFiniteObjective(it, "em_fit: log-likelihood is not finite");
            if (it > 0 && sweep.loglik < prev - 1e-9 * std::max(1.0, std::abs(prev)))
                throw std::logic_error("em_fit: log-likelihood decreased from " +
                                       std::to_string(prev) + " to " +
                                       std::to_string(sweep.loglik));
            ll_trace.push_back(sweep.loglik);
            const bool converged =
                it > 0 && std::abs(sweep.loglik - prev) <= cfg.rel_tol * (1.0 + std::abs(sweep.loglik));
            prev = sweep.loglik;
            mix = std::move(sweep.updated);
            if (converged) break;
        }
        const double final_ll = detail::total_loglik(data, mix);
        ll_trace.push_back(final_ll);
        return std::tuple<Mixture, double, std::vector<double>>{std::move(mix), final_ll,
                                                                std::move(ll_trace)};
    };

    std::vector<Rng> streams = rng.split_n(static_cast<std::size_t>(cfg.n_restarts));
    bool have_best = false;
    Mixture best;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> best_trace;
    std::exception_ptr last_error;
    for (int rs = 0; rs < cfg.n_restarts; ++rs) {
        try {
            auto [mix, ll, tr] = run_restart(streams[static_cast<std::size_t>(rs)]);
            if (!have_best || ll > best_ll) {
                have_best = true;
                best = std::move(mix);
                best_ll = ll;
                best_trace = std::move(tr);
            }
        } catch (const Error&) {
            last_error = std::current_exception();
        }
    }
    if (!have_best) {
        if (last_error) std::rethrow_exception(last_error);
        throw SingularComponent("em_fit: all restarts failed");
    }
    if (trace) *trace = std::move(best_trace);
    return {std::move(best), best_ll};
}

}  // namespace metacond
