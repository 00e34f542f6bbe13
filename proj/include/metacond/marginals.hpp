#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/math.hpp"
#include "metacond/mixture.hpp"

namespace metacond {

/// Univariate Gaussian mixture in (weight, mean, sd) form.
struct UnivariateMixture {
    Eigen::VectorXd weights;
    Eigen::VectorXd means;
    Eigen::VectorXd sds;

    int size() const { return static_cast<int>(weights.size()); }
};

/// Margin of a multivariate mixture along coordinate j.
inline UnivariateMixture mixture_margin(const Mixture& mix, int j) {
    const int K = mix.n_components();
    UnivariateMixture m;
    m.weights.resize(K);
    m.means.resize(K);
    m.sds.resize(K);
    for (int k = 0; k < K; ++k) {
        m.weights(k) = mix.weights[static_cast<std::size_t>(k)];
        m.means(k) = mix.components[static_cast<std::size_t>(k)].mean(j);
        m.sds(k) = std::sqrt(mix.components[static_cast<std::size_t>(k)].cov(j, j));
    }
    return m;
}

inline double gmm_cdf(double x, const UnivariateMixture& m) {
    double s = 0.0;
    for (int k = 0; k < m.size(); ++k)
        s += m.weights(k) * normal_cdf((x - m.means(k)) / m.sds(k));
    return s;
}

inline double gmm_pdf(double x, const UnivariateMixture& m) {
    double s = 0.0;
    for (int k = 0; k < m.size(); ++k) {
        const double z = (x - m.means(k)) / m.sds(k);
        s += m.weights(k) * normal_pdf(z) / m.sds(k);
    }
    return s;
}

inline double gmm_logpdf(double x, const UnivariateMixture& m) {
    std::vector<double> lw(static_cast<std::size_t>(m.size()));
    for (int k = 0; k < m.size(); ++k) {
        const double z = (x - m.means(k)) / m.sds(k);
        lw[static_cast<std::size_t>(k)] =
            std::log(m.weights(k)) + normal_logpdf(z) - std::log(m.sds(k));
    }
    return log_sum_exp(lw);
}

namespace detail {

/// Newton refinement of a quantile from a starting point; returns true and
/// writes the root when |cdf(z) - u| <= 1e-12 is reached.
inline bool quantile_newton(double u, const UnivariateMixture& m, double z0, int steps,
                            double* out) {
    double z = z0;
    for (int it = 0; it < steps; ++it) {
        const double f = gmm_cdf(z, m) - u;
        if (std::abs(f) <= 1e-12) {
            // One or two extra polish steps push the residual toward machine
            // precision, which downstream finite-difference checks rely on.
            double zp = z, fp = f;
            for (int p = 0; p < 2; ++p) {
                const double dens = gmm_pdf(zp, m);
                if (!(dens > 0.0)) break;
                const double step = fp / dens;
                const double zn = zp - step;
                if (!std::isfinite(zn)) break;
                zp = zn;
                if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(zp))) break;
                fp = gmm_cdf(zp, m) - u;
            }
            *out = zp;
            return true;
        }
        const double dens = gmm_pdf(z, m);
        if (!(dens > 0.0)) return false;
        const double zn = z - f / dens;
        if (!std::isfinite(zn)) return false;
        z = zn;
    }
    return false;
}

}  // namespace detail

/// Quantile of a univariate Gaussian mixture. The root is bracketed by the
/// extreme per-component quantiles mu_k + sd_k * Phi^-1(u) (the mixture CDF
/// is provably <= u at the min and >= u at the max), then solved by Newton
/// steps safeguarded inside the bracket, with inverse-quadratic or bisection
/// fallback; bisection is forced whenever the bracket fails to halve over two
/// iterations, so plateaus between well-separated components cannot stall the
/// solver. Terminates at |cdf(z)-u| <= 1e-12 (then polishes) or when the
/// bracket collapses below 1e-13 * max(1,|z|).
inline double gmm_quantile(double u, const UnivariateMixture& m) {
    if (!(u > 0.0) || !(u < 1.0))
        throw DomainError("gmm_quantile: u must lie in (0,1), got " + std::to_string(u));
    const double zu = normal_quantile(u);
    double a = std::numeric_limits<double>::infinity();
    double b = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m.size(); ++k) {
        const double q = m.means(k) + m.sds(k) * zu;
        a = std::min(a, q);
        b = std::max(b, q);
    }
    if (a == b) return a;

    double fa = gmm_cdf(a, m) - u;
    double fb = gmm_cdf(b, m) - u;
    // Rounding safety: widen if the analytic bracket fails numerically.
    double w = std::max(b - a, 1e-8);
    while (fa > 0.0) {
        a -= w;
        w *= 2.0;
        fa = gmm_cdf(a, m) - u;
    }
    while (fb < 0.0) {
        b += w;
        w *= 2.0;
        fb = gmm_cdf(b, m) - u;
    }
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;

    double x = a + 0.5 * (b - a);
    double width2 = b - a;  // bracket width two iterations ago
    for (int it = 0; it < 256; ++it) {
        const double fx = gmm_cdf(x, m) - u;
        if (std::abs(fx) <= 1e-12) {
            double z;
            if (detail::quantile_newton(u, m, x, 1, &z)) return z;
            return x;
        }
        if (fx < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if (b - a <= 1e-13 * std::max(1.0, std::abs(x))) return x;

        double cand = std::numeric_limits<double>::quiet_NaN();
        if (it % 2 == 1 && b - a > 0.5 * width2) {
            // Insufficient progress: force bisection.
            cand = a + 0.5 * (b - a);
        } else {
            const double dens = gmm_pdf(x, m);
            if (dens > 0.0) {
                const double n = x - fx / dens;
                if (n > a && n < b) cand = n;
            }
            if (!std::isfinite(cand) && fa != fb && fa != fx && fb != fx) {
                const double q = a * fb * fx / ((fa - fb) * (fa - fx)) +
                                 b * fa * fx / ((fb - fa) * (fb - fx)) +
                                 x * fa * fb / ((fx - fa) * (fx - fb));
                if (q > a && q < b) cand = q;
            }
            if (!std::isfinite(cand)) cand = a + 0.5 * (b - a);
        }
        if (it % 2 == 1) width2 = b - a;
        x = cand;
    }
    return x;
}

/// Warm-started quantile: tries a few Newton steps from z0 (cheap when z0 is
/// already close, as it is across optimizer iterations) and falls back to the
/// full bracketed solve.
inline double gmm_quantile_warm(double u, const UnivariateMixture& m, double z0) {
    double z;
    if (std::isfinite(z0) && detail::quantile_newton(u, m, z0, 4, &z)) return z;
    return gmm_quantile(u, m);
}

/// Fit result of the AIC scan.
struct MarginalFit {
    UnivariateMixture gmm;
    int n_components = 0;
    double aic = 0.0;
    double loglik = 0.0;
};

/// Univariate mixture fit with the component count chosen by AIC over
/// K = 1..k_max; each K counts p = 3K-1 free parameters. The data column is
/// sorted before fitting, which makes the whole scan (seeding, EM sums, AIC)
/// invariant to the order of the input rows. K values whose EM fails
/// (singular/empty component) are skipped; if every K fails the last error is
/// rethrown.
inline MarginalFit fit_marginal_aic(const Eigen::VectorXd& x, int k_max, const EmConfig& cfg,
                                    Rng& rng) {
    if (x.size() < 2) throw UnsupportedShape("fit_marginal_aic: need at least 2 observations");
    Eigen::VectorXd sorted = x;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const Eigen::MatrixXd data = sorted;

    std::vector<Rng> streams = rng.split_n(static_cast<std::size_t>(k_max));
    MarginalFit best;
    bool have_best = false;
    std::exception_ptr last_error;
    for (int K = 1; K <= k_max; ++K) {
        try {
            auto [mix, ll] = em_fit(data, K, cfg, streams[static_cast<std::size_t>(K - 1)]);
            const double aic = 2.0 * (3.0 * K - 1.0) - 2.0 * ll;
            if (!have_best || aic < best.aic) {
                have_best = true;
                UnivariateMixture um;
                um.weights.resize(K);
                um.means.resize(K);
                um.sds.resize(K);
                for (int k = 0; k < K; ++k) {
                    um.weights(k) = mix.weights[static_cast<std::size_t>(k)];
                    um.means(k) = mix.components[static_cast<std::size_t>(k)].mean(0);
                    um.sds(k) = std::sqrt(mix.components[static_cast<std::size_t>(k)].cov(0, 0));
                }
                best = MarginalFit{std::move(um), K, aic, ll};
            }
        } catch (const Error&) {
            last_error = std::current_exception();
        }
    }
    if (!have_best) std::rethrow_exception(last_error);
    return best;
}

/// Column-wise pseudo-observations rank/(n+1), with average ranks on ties, so
/// every entry lands strictly inside (0,1).
inline Eigen::MatrixXd pseudo_observations(const Eigen::MatrixXd& data) {
    const auto n = data.rows();
    if (n < 1) throw UnsupportedShape("pseudo_observations: empty data");
    Eigen::MatrixXd u(n, data.cols());
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        std::sort(idx.begin(), idx.end(),
                  [&](Eigen::Index a, Eigen::Index b) { return data(a, j) < data(b, j); });
        Eigen::Index i = 0;
        while (i < n) {
            Eigen::Index e = i;
            while (e + 1 < n && data(idx[static_cast<std::size_t>(e + 1)], j) ==
                                    data(idx[static_cast<std::size_t>(i)], j))
                ++e;
            // 1-based ranks i+1..e+1 share the average rank.
            const double r = 0.5 * static_cast<double>(i + 1 + e + 1);
            for (Eigen::Index t = i; t <= e; ++t)
                u(idx[static_cast<std::size_t>(t)], j) = r / static_cast<double>(n + 1);
            i = e + 1;
        }
    }
    return u;
}

/// One fitted margin: either a parametric univariate mixture or the scaled
/// empirical CDF of the training column.
struct MarginalModel {
    enum class Kind { parametric, empirical };
    Kind kind = Kind::parametric;
    UnivariateMixture gmm;   // Kind::parametric
    Eigen::VectorXd sorted;  // Kind::empirical, ascending
};

inline MarginalModel empirical_marginal(const Eigen::VectorXd& x) {
    MarginalModel m;
    m.kind = MarginalModel::Kind::empirical;
    m.sorted = x;
    std::sort(m.sorted.data(), m.sorted.data() + m.sorted.size());
    return m;
}

/// CDF. The empirical variant is #{x_i <= x} / (n+1): right-continuous,
/// scaled so its range stays inside (0,1) ready for quantile transforms.
inline double marginal_cdf(double x, const MarginalModel& m) {
    if (m.kind == MarginalModel::Kind::parametric) return gmm_cdf(x, m.gmm);
    const auto n = m.sorted.size();
    const auto c = std::upper_bound(m.sorted.data(), m.sorted.data() + n, x) - m.sorted.data();
    return static_cast<double>(c) / static_cast<double>(n + 1);
}

/// Quantile. The empirical variant inverts the scaled ECDF by linear
/// interpolation between order statistics (x_(i) at u = i/(n+1)), clamped to
/// the data range outside [1/(n+1), n/(n+1)].
inline double marginal_quantile(double u, const MarginalModel& m) {
    if (!(u > 0.0) || !(u < 1.0))
        throw DomainError("marginal_quantile: u must lie in (0,1), got " + std::to_string(u));
    if (m.kind == MarginalModel::Kind::parametric) return gmm_quantile(u, m.gmm);
    const auto n = m.sorted.size();
    const double t = u * static_cast<double>(n + 1);
    if (t <= 1.0) return m.sorted(0);
    if (t >= static_cast<double>(n)) return m.sorted(n - 1);
    const auto i = static_cast<Eigen::Index>(std::floor(t));
    const double frac = t - static_cast<double>(i);
    return m.sorted(i - 1) + frac * (m.sorted(i) - m.sorted(i - 1));
}

}  // namespace metacond
