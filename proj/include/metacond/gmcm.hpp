#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "metacond/dual.hpp"
#include "metacond/errors.hpp"
#include "metacond/marginals.hpp"
#include "metacond/mixture.hpp"
#include "metacond/optim.hpp"
#include "metacond/rng.hpp"
#include "metacond/scoring.hpp"

namespace metacond {

/// Gaussian mixture copula: the dependence structure implicit in a latent
/// Gaussian mixture. The latent mixture is only identified up to a diagonal
/// affine map, so fitted parameters are reported in the standardized chart
/// (component 0 has zero mean and unit per-dimension variance).
struct GmcmParams {
    Mixture mixture;
    bool standardized = false;
};

/// Canonical representative of the equivalence class of `p` under diagonal
/// affine maps: z -> D^-1 (z - mu_0) with D = sqrt(diag(S_0)). Idempotent,
/// and leaves the copula (hence the copula log-likelihood) unchanged.
inline GmcmParams standardize(const GmcmParams& p) {
    const int d = p.mixture.dim();
    const GaussianParams& c0 = p.mixture.components.front();
    Eigen::VectorXd dinv(d);
    for (int j = 0; j < d; ++j) {
        const double v = c0.cov(j, j);
        if (!(v > 0.0))
            throw NotPositiveDefinite(j, v);
        dinv(j) = 1.0 / std::sqrt(v);
    }
    GmcmParams out;
    out.standardized = true;
    out.mixture.weights = p.mixture.weights;
    out.mixture.components.reserve(p.mixture.components.size());
    for (const auto& c : p.mixture.components) {
        GaussianParams t;
        t.mean = dinv.asDiagonal() * (c.mean - c0.mean);
        t.cov = dinv.asDiagonal() * c.cov * dinv.asDiagonal();
        out.mixture.components.push_back(std::move(t));
    }
    return out;
}

/// Unconstrained chart over standardized copula parameters. Layout of theta:
///   [ logits 1..K-1 | mean rows 1..K-1 (row-major) | per-component lower
///     Cholesky factors, row-major, diagonal stored as log ]
/// Weight logit 0 and mean row 0 are pinned at zero; the forward map divides
/// every factor row r (and mean entry r) by the row norm of component 0's
/// factor, which enforces unit per-dimension variance of component 0 without
/// constraining theta.
struct UnconstrainedGmcm {
    int d = 0;
    int K = 0;
    Eigen::VectorXd theta;

    static int n_params(int d, int K) { return (K - 1) + (K - 1) * d + K * d * (d + 1) / 2; }
};

namespace gmcm_detail {

template <class T>
T lse(const std::vector<T>& a) {
    using std::exp;
    using std::log;
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& x : a) m = std::max(m, value_of(x));
    if (!std::isfinite(m)) return T(m);
    T s(0.0);
    for (const auto& x : a) s += exp(x - T(m));
    return T(m) + log(s);
}

/// Forward map of the chart, usable with T = double (likelihood) or T = Dual
/// (likelihood + gradient in one sweep).
template <class T>
struct Eval {
    int d = 0, K = 0;
    std::vector<T> log_w;     // K
    std::vector<T> w;         // K
    std::vector<T> mean;      // K*d, standardized
    std::vector<T> chol;      // K*d*d, lower triangles, standardized
    std::vector<T> sigma;     // K*d margin standard deviations
    std::vector<T> log_norm;  // K: log of the component normalizing constant
    mutable std::vector<T> scratch;

    const T& l(int k, int r, int c) const { return chol[(k * d + r) * d + c]; }
    T& l(int k, int r, int c) { return chol[(k * d + r) * d + c]; }

    T margin_cdf(int j, const T& z) const {
        T s(0.0);
        for (int k = 0; k < K; ++k)
            s += w[static_cast<std::size_t>(k)] *
                 normal_cdf((z - mean[static_cast<std::size_t>(k * d + j)]) /
                            sigma[static_cast<std::size_t>(k * d + j)]);
        return s;
    }

    T margin_logpdf(int j, const T& z) const {
        using std::log;
        std::vector<T> terms(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const T t = (z - mean[static_cast<std::size_t>(k * d + j)]) /
                        sigma[static_cast<std::size_t>(k * d + j)];
            terms[static_cast<std::size_t>(k)] = log_w[static_cast<std::size_t>(k)] -
                                                 T(0.5 * log_2pi) - T(0.5) * t * t -
                                                 log(sigma[static_cast<std::size_t>(k * d + j)]);
        }
        return lse(terms);
    }

    T joint_logpdf(const T* z) const {
        std::vector<T> terms(static_cast<std::size_t>(K));
        scratch.resize(static_cast<std::size_t>(d));
        for (int k = 0; k < K; ++k) {
            T q(0.0);
            for (int r = 0; r < d; ++r) {
                T s = z[r] - mean[static_cast<std::size_t>(k * d + r)];
                for (int c = 0; c < r; ++c) s -= l(k, r, c) * scratch[static_cast<std::size_t>(c)];
                scratch[static_cast<std::size_t>(r)] = s / l(k, r, r);
                q += scratch[static_cast<std::size_t>(r)] * scratch[static_cast<std::size_t>(r)];
            }
            terms[static_cast<std::size_t>(k)] =
                log_w[static_cast<std::size_t>(k)] + log_norm[static_cast<std::size_t>(k)] -
                T(0.5) * q;
        }
        return lse(terms);
    }

    /// Copula log-density at one latent point: joint minus the margins.
    T point_loglik(const T* z) const {
        T out = joint_logpdf(z);
        for (int j = 0; j < d; ++j) out -= margin_logpdf(j, z[j]);
        return out;
    }
};

template <class T, class Theta>
Eval<T> build_eval(const Theta& theta, int d, int K) {
    using std::exp;
    using std::log;
    using std::sqrt;
    Eval<T> e;
    e.d = d;
    e.K = K;
    const int tri = d * (d + 1) / 2;

    // Log-softmax weights, logit 0 pinned.
    std::vector<T> logits(static_cast<std::size_t>(K), T(0.0));
    for (int k = 1; k < K; ++k) logits[static_cast<std::size_t>(k)] = theta[k - 1];
    const T norm = lse(logits);
    e.log_w.resize(static_cast<std::size_t>(K));
    e.w.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        e.log_w[static_cast<std::size_t>(k)] = logits[static_cast<std::size_t>(k)] - norm;
        e.w[static_cast<std::size_t>(k)] = exp(e.log_w[static_cast<std::size_t>(k)]);
    }

    // Raw factors (diagonal exponentiated).
    e.chol.assign(static_cast<std::size_t>(K) * d * d, T(0.0));
    int idx = (K - 1) + (K - 1) * d;
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < d; ++r)
            for (int c = 0; c <= r; ++c) {
                const T v = theta[idx++];
                e.l(k, r, c) = (c == r) ? exp(v) : v;
            }
    (void)tri;

    // Row norms of component 0 give the standardizing scale.
    std::vector<T> dinv(static_cast<std::size_t>(d));
    for (int r = 0; r < d; ++r) {
        T s(0.0);
        for (int c = 0; c <= r; ++c) s += e.l(0, r, c) * e.l(0, r, c);
        dinv[static_cast<std::size_t>(r)] = T(1.0) / sqrt(s);
    }
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < d; ++r)
            for (int c = 0; c <= r; ++c) e.l(k, r, c) *= dinv[static_cast<std::size_t>(r)];

    // Means (row 0 pinned at zero), rescaled the same way.
    e.mean.assign(static_cast<std::size_t>(K) * d, T(0.0));
    idx = K - 1;
    for (int k = 1; k < K; ++k)
        for (int j = 0; j < d; ++j)
            e.mean[static_cast<std::size_t>(k * d + j)] =
                theta[idx++] * dinv[static_cast<std::size_t>(j)];

    // Margin standard deviations and component normalizations.
    e.sigma.resize(static_cast<std::size_t>(K) * d);
    e.log_norm.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        T ld(0.0);
        for (int j = 0; j < d; ++j) {
            T s(0.0);
            for (int c = 0; c <= j; ++c) s += e.l(k, j, c) * e.l(k, j, c);
            e.sigma[static_cast<std::size_t>(k * d + j)] = sqrt(s);
            ld += log(e.l(k, j, j));
        }
        e.log_norm[static_cast<std::size_t>(k)] = T(-0.5 * d * log_2pi) - ld;
    }
    return e;
}

inline UnivariateMixture margin_of(const Eval<double>& e, int j) {
    UnivariateMixture m;
    m.weights.resize(e.K);
    m.means.resize(e.K);
    m.sds.resize(e.K);
    for (int k = 0; k < e.K; ++k) {
        m.weights(k) = e.w[static_cast<std::size_t>(k)];
        m.means(k) = e.mean[static_cast<std::size_t>(k * e.d + j)];
        m.sds(k) = e.sigma[static_cast<std::size_t>(k * e.d + j)];
    }
    return m;
}

inline void check_unit_hypercube(const Eigen::MatrixXd& u) {
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index j = 0; j < u.cols(); ++j)
            if (!(u(i, j) > 0.0) || !(u(i, j) < 1.0))
                throw DomainError("pseudo-observation (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") = " + std::to_string(u(i, j)) +
                                  " outside (0,1)");
}

}  // namespace gmcm_detail

/// Latent z grid carried across optimizer iterations so quantile solves can
/// warm-start from the previous iterate.
struct QuantileCache {
    Eigen::MatrixXd z;
    bool valid = false;
};

/// Copula log-likelihood of pseudo-observations U under the mixture copula:
/// sum_i [ log psi(z_i) - sum_j log psi_j(z_ij) ] with z_ij the margin
/// quantiles of u_ij.
inline double gmcm_loglik(const Eigen::MatrixXd& u, const GmcmParams& p,
                          QuantileCache* cache = nullptr) {
    gmcm_detail::check_unit_hypercube(u);
    const int d = p.mixture.dim();
    if (u.cols() != d)
        throw UnsupportedShape("gmcm_loglik: U has " + std::to_string(u.cols()) +
                               " columns, copula has dimension " + std::to_string(d));
    std::vector<UnivariateMixture> margins;
    margins.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) margins.push_back(mixture_margin(p.mixture, j));

    const bool warm = cache && cache->valid && cache->z.rows() == u.rows() &&
                      cache->z.cols() == u.cols();
    Eigen::MatrixXd z(u.rows(), d);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (int j = 0; j < d; ++j)
            z(i, j) = warm ? gmm_quantile_warm(u(i, j), margins[static_cast<std::size_t>(j)],
                                               cache->z(i, j))
                           : gmm_quantile(u(i, j), margins[static_cast<std::size_t>(j)]);
    if (cache) {
        cache->z = z;
        cache->valid = true;
    }

    double ll = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        ll += mixture_logpdf(z.row(i).transpose(), p.mixture);
        for (int j = 0; j < d; ++j) ll -= gmm_logpdf(z(i, j), margins[static_cast<std::size_t>(j)]);
    }
    return ll;
}

/// Chart <-> parameter conversions.
inline UnconstrainedGmcm chart_from_params(const GmcmParams& p) {
    const GmcmParams s = p.standardized ? p : standardize(p);
    const int d = s.mixture.dim();
    const int K = s.mixture.n_components();
    UnconstrainedGmcm chart;
    chart.d = d;
    chart.K = K;
    chart.theta.resize(UnconstrainedGmcm::n_params(d, K));
    int idx = 0;
    const double lw0 = std::log(s.mixture.weights[0]);
    for (int k = 1; k < K; ++k)
        chart.theta(idx++) = std::log(s.mixture.weights[static_cast<std::size_t>(k)]) - lw0;
    for (int k = 1; k < K; ++k)
        for (int j = 0; j < d; ++j)
            chart.theta(idx++) = s.mixture.components[static_cast<std::size_t>(k)].mean(j);
    for (int k = 0; k < K; ++k) {
        const Eigen::MatrixXd L = cholesky(s.mixture.components[static_cast<std::size_t>(k)].cov);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c <= r; ++c)
                chart.theta(idx++) = (c == r) ? std::log(L(r, c)) : L(r, c);
    }
    return chart;
}

inline GmcmParams params_from_chart(const UnconstrainedGmcm& chart) {
    const auto e = gmcm_detail::build_eval<double>(chart.theta, chart.d, chart.K);
    GmcmParams p;
    p.standardized = true;
    p.mixture.weights.resize(static_cast<std::size_t>(chart.K));
    p.mixture.components.resize(static_cast<std::size_t>(chart.K));
    for (int k = 0; k < chart.K; ++k) {
        p.mixture.weights[static_cast<std::size_t>(k)] = e.w[static_cast<std::size_t>(k)];
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(chart.d, chart.d);
        for (int r = 0; r < chart.d; ++r)
            for (int c = 0; c <= r; ++c) L(r, c) = e.l(k, r, c);
        Eigen::VectorXd mu(chart.d);
        for (int j = 0; j < chart.d; ++j) mu(j) = e.mean[static_cast<std::size_t>(k * chart.d + j)];
        p.mixture.components[static_cast<std::size_t>(k)] =
            GaussianParams{std::move(mu), L * L.transpose()};
    }
    return p;
}

/// Copula log-likelihood and its exact gradient in the chart. The quantiles
/// z_ij = Psi_j^-1(u_ij) depend on theta implicitly; differentiating
/// Psi_j(z; theta) = u at fixed u gives dz/dtheta = -(dPsi_j/dtheta) /
/// psi_j(z), which seeds the tangent of z so one forward sweep through the
/// copula density collects the full gradient.
inline std::pair<double, Eigen::VectorXd> gmcm_grad(const Eigen::MatrixXd& u,
                                                    const UnconstrainedGmcm& chart,
                                                    QuantileCache* cache = nullptr) {
    gmcm_detail::check_unit_hypercube(u);
    const int d = chart.d, K = chart.K;
    const int P = static_cast<int>(chart.theta.size());
    const auto n = u.rows();

    const auto ed = gmcm_detail::build_eval<double>(chart.theta, d, K);
    std::vector<UnivariateMixture> margins;
    margins.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) margins.push_back(gmcm_detail::margin_of(ed, j));

    const bool warm = cache && cache->valid && cache->z.rows() == n && cache->z.cols() == d;
    Eigen::MatrixXd z(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            z(i, j) = warm ? gmm_quantile_warm(u(i, j), margins[static_cast<std::size_t>(j)],
                                               cache->z(i, j))
                           : gmm_quantile(u(i, j), margins[static_cast<std::size_t>(j)]);
    if (cache) {
        cache->z = z;
        cache->valid = true;
    }

    std::vector<Dual> theta_dual(static_cast<std::size_t>(P));
    for (int t = 0; t < P; ++t) theta_dual[static_cast<std::size_t>(t)] = Dual::var(chart.theta(t), t, P);
    const auto eg = gmcm_detail::build_eval<Dual>(theta_dual, d, K);

    Dual total(0.0);
    std::vector<Dual> zrow(static_cast<std::size_t>(d));
    std::vector<double> tangent(static_cast<std::size_t>(P));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            // dPsi_j/dtheta at fixed z, then the implicit-function seed.
            const Dual c = eg.margin_cdf(j, Dual(z(i, j)));
            const double dens = gmm_pdf(z(i, j), margins[static_cast<std::size_t>(j)]);
            for (int t = 0; t < P; ++t) tangent[static_cast<std::size_t>(t)] = -c.deriv(t) / dens;
            zrow[static_cast<std::size_t>(j)] = Dual::with_tangent(z(i, j), tangent.data(), P);
        }
        total += eg.point_loglik(zrow.data());
    }

    Eigen::VectorXd grad(P);
    for (int t = 0; t < P; ++t) grad(t) = total.deriv(t);
    return {total.value(), grad};
}

/// Double-precision objective on the chart (used by the derivative-free
/// fitter); same quantile warm-start mechanics as gmcm_grad.
inline double gmcm_loglik_chart(const Eigen::MatrixXd& u, const Eigen::VectorXd& theta, int d,
                                int K, QuantileCache* cache = nullptr) {
    const auto ed = gmcm_detail::build_eval<double>(theta, d, K);
    const auto n = u.rows();
    std::vector<UnivariateMixture> margins;
    margins.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) margins.push_back(gmcm_detail::margin_of(ed, j));
    const bool warm = cache && cache->valid && cache->z.rows() == n && cache->z.cols() == d;
    Eigen::MatrixXd z(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            z(i, j) = warm ? gmm_quantile_warm(u(i, j), margins[static_cast<std::size_t>(j)],
                                               cache->z(i, j))
                           : gmm_quantile(u(i, j), margins[static_cast<std::size_t>(j)]);
    if (cache) {
        cache->z = z;
        cache->valid = true;
    }
    double ll = 0.0;
    std::vector<double> zrow(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) zrow[static_cast<std::size_t>(j)] = z(i, j);
        ll += ed.point_loglik(zrow.data());
    }
    return ll;
}

struct FitOptions {
    enum class Method { ad, fd, pem };
    Method method = Method::ad;
    int max_iter = 10000;
    double learning_rate = 1e-3;  // Adam step size
    double tol = 1e-8;            // relative stall tolerance
    int stall_window = 100;       // iterations without improvement before stopping
    EmConfig em;                  // initialization (and pseudo-EM M-step) settings
};

inline const char* method_name(FitOptions::Method m) {
    switch (m) {
        case FitOptions::Method::ad: return "ad";
        case FitOptions::Method::fd: return "fd";
        default: return "pem";
    }
}

struct GmcmFit {
    GmcmParams params;
    double loglik = 0.0;
    std::vector<double> trace;
    int iterations = 0;
};

/// Fits the copula to pseudo-observations. All three methods share the same
/// initialization: EM on the probit-transformed data, standardized. `ad`
/// maximizes with Adam on exact gradients, `fd` with Nelder-Mead on the same
/// chart (derivative-free), `pem` alternates quantile refresh with one EM
/// sweep in the latent space (fast, but not guaranteed monotone in the
/// copula likelihood). All methods return the best iterate seen.
inline GmcmFit fit_gmcm(const Eigen::MatrixXd& u, int K, const FitOptions& opts, Rng& rng) {
    gmcm_detail::check_unit_hypercube(u);
    const auto n = u.rows();
    const int d = static_cast<int>(u.cols());
    if (K < 1) throw UnsupportedShape("fit_gmcm: K must be >= 1");

    Eigen::MatrixXd z0(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) z0(i, j) = normal_quantile(u(i, j));
    auto [mix0, ll0] = em_fit(z0, K, opts.em, rng);
    (void)ll0;
    const GmcmParams start = standardize(GmcmParams{std::move(mix0), false});

    GmcmFit fit;
    if (opts.method == FitOptions::Method::ad) {
        UnconstrainedGmcm chart = chart_from_params(start);
        QuantileCache cache;
        OptimResult res = adam_maximize(
            [&](const Eigen::VectorXd& theta) {
                UnconstrainedGmcm c{d, K, theta};
                return gmcm_grad(u, c, &cache);
            },
            chart.theta, opts.max_iter, opts.learning_rate, opts.tol, opts.stall_window);
        fit.params = params_from_chart(UnconstrainedGmcm{d, K, res.x});
        fit.loglik = res.f;
        fit.trace = std::move(res.trace);
        fit.iterations = res.iterations;
    } else if (opts.method == FitOptions::Method::fd) {
        UnconstrainedGmcm chart = chart_from_params(start);
        QuantileCache cache;
        OptimResult res = nelder_mead_maximize(
            [&](const Eigen::VectorXd& theta) {
                return gmcm_loglik_chart(u, theta, d, K, &cache);
            },
            chart.theta, opts.max_iter, opts.tol);
        fit.params = params_from_chart(UnconstrainedGmcm{d, K, res.x});
        fit.loglik = res.f;
        fit.trace = std::move(res.trace);
        fit.iterations = res.iterations;
    } else {
        // Pseudo-EM: refresh latent quantiles under the current margins, take
        // one EM sweep in latent space, re-standardize; track the copula
        // log-likelihood (which this update does not always increase).
        GmcmParams cur = start;
        QuantileCache cache;
        double best_ll = -std::numeric_limits<double>::infinity();
        GmcmParams best = cur;
        int best_iter = 0;
        for (int it = 0; it < opts.max_iter; ++it) {
            const double ll = gmcm_loglik(u, cur, &cache);
            if (!std::isfinite(ll))
                throw NonFiniteObjective(it, "fit_gmcm(pem): copula log-likelihood is not finite");
            fit.trace.push_back(ll);
            fit.iterations = it + 1;
            if (!std::isfinite(best_ll) || ll > best_ll + opts.tol * (1.0 + std::abs(best_ll)))
                best_iter = it;
            if (ll > best_ll) {
                best_ll = ll;
                best = cur;
            }
            if (it - best_iter >= opts.stall_window) break;

            const Eigen::MatrixXd& z = cache.z;
            const Eigen::RowVectorXd cm = z.colwise().mean();
            const double trace_s = (z.rowwise() - cm).array().square().colwise().mean().sum();
            const detail::EmSweep sweep =
                detail::em_sweep(z, cur.mixture, opts.em.ridge * trace_s / d);
            cur = standardize(GmcmParams{sweep.updated, false});
        }
        fit.params = std::move(best);
        fit.loglik = best_ll;
    }
    return fit;
}

/// Draws pseudo-observations from the copula of `mix` by sampling the latent
/// mixture and pushing each coordinate through its own margin CDF.
inline Eigen::MatrixXd gmcm_uniform_sample(const Mixture& mix, int n, Rng& rng) {
    const int d = mix.dim();
    std::vector<UnivariateMixture> margins;
    margins.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) margins.push_back(mixture_margin(mix, j));
    Eigen::MatrixXd x = mixture_sample(mix, n, rng);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = gmm_cdf(x(i, j), margins[static_cast<std::size_t>(j)]);
    return x;
}

struct CompareRow {
    FitOptions::Method method;
    int replicate = 0;
    double loglik = std::numeric_limits<double>::quiet_NaN();           // held-out
    double energy_distance = std::numeric_limits<double>::quiet_NaN();  // fitted vs fresh true U
    bool ok = false;
};

struct CompareReport {
    std::vector<CompareRow> rows;

    double mean(FitOptions::Method m, bool ed) const {
        double s = 0.0;
        int c = 0;
        for (const auto& r : rows)
            if (r.method == m && r.ok) s += (ed ? r.energy_distance : r.loglik), ++c;
        return c ? s / c : std::numeric_limits<double>::quiet_NaN();
    }
    double mean_loglik(FitOptions::Method m) const { return mean(m, false); }
    double mean_energy_distance(FitOptions::Method m) const { return mean(m, true); }
};

/// Benchmark of the three fitters on data simulated from a known copula.
/// Every method within a replicate starts from the identical EM
/// initialization (same seed), so differences measure the optimizers, not
/// the starting point. Held-out log-likelihood uses a fresh sample of the
/// same size; the energy distance compares pseudo-observations sampled from
/// the fitted copula against a second fresh sample from the truth. A failed
/// fit marks its row not-ok instead of aborting the study.
inline CompareReport compare_fitters(const Mixture& truth, int n, int n_rep,
                                     const FitOptions& base, Rng& rng) {
    const int K = truth.n_components();
    CompareReport report;
    const auto methods = {FitOptions::Method::ad, FitOptions::Method::fd,
                          FitOptions::Method::pem};
    for (int rep = 0; rep < n_rep; ++rep) {
        Rng data_rng = rng.split();
        const std::uint64_t init_seed = rng.next_u64();
        Rng sample_rng = rng.split();

        const Eigen::MatrixXd u_train = gmcm_uniform_sample(truth, n, data_rng);
        const Eigen::MatrixXd u_holdout = gmcm_uniform_sample(truth, n, data_rng);
        const Eigen::MatrixXd u_fresh = gmcm_uniform_sample(truth, n, data_rng);

        for (FitOptions::Method m : methods) {
            CompareRow row;
            row.method = m;
            row.replicate = rep;
            Rng fit_rng(init_seed);  // identical init across methods
            Rng draw_rng = sample_rng.split();
            try {
                FitOptions opts = base;
                opts.method = m;
                const GmcmFit fit = fit_gmcm(u_train, K, opts, fit_rng);
                row.loglik = gmcm_loglik(u_holdout, fit.params);
                const Eigen::MatrixXd u_model =
                    gmcm_uniform_sample(fit.params.mixture, n, draw_rng);
                row.energy_distance = energy_distance(u_fresh, u_model);
                row.ok = true;
            } catch (const Error&) {
                row.ok = false;
            }
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace metacond
