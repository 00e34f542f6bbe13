#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <limits>
#include <utility>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/gaussian.hpp"
#include "metacond/math.hpp"
#include "metacond/rng.hpp"

namespace metacond {

/// Unified skew-normal in the parametrization (xi, gamma, omega_bar, Omega*):
/// with (U0, U1) ~ N(0, Omega*), Omega* = [[Gamma, Delta'], [Delta, Omega]],
/// the variable is Y = xi + omega * (U1 | U0 + gamma > 0), omega =
/// diag(omega_bar). `Omega` is the d x d correlation block (unit diagonal),
/// `Gamma` the p x p latent block, `Delta` the d x p cross block.
struct SunParams {
    Eigen::VectorXd xi;         // location, length d
    Eigen::VectorXd gamma;      // truncation shift, length p
    Eigen::VectorXd omega_bar;  // positive scales, length d
    Eigen::MatrixXd Gamma;      // p x p
    Eigen::MatrixXd Delta;      // d x p
    Eigen::MatrixXd Omega;      // d x d, unit diagonal

    int dim() const { return static_cast<int>(xi.size()); }
    int latent_dim() const { return static_cast<int>(gamma.size()); }

    /// The full (p+d) x (p+d) block matrix [[Gamma, Delta'], [Delta, Omega]].
    Eigen::MatrixXd omega_star() const {
        const int d = dim(), p = latent_dim();
        Eigen::MatrixXd full(p + d, p + d);
        full.topLeftCorner(p, p) = Gamma;
        full.topRightCorner(p, d) = Delta.transpose();
        full.bottomLeftCorner(d, p) = Delta;
        full.bottomRightCorner(d, d) = Omega;
        return full;
    }

    /// Full scale matrix of the observed block: omega * Omega * omega.
    Eigen::MatrixXd full_scale() const {
        return omega_bar.asDiagonal() * Omega * omega_bar.asDiagonal();
    }
};

namespace sun_detail {

inline void check_params(const SunParams& p) {
    const int d = p.dim(), q = p.latent_dim();
    if (p.omega_bar.size() != d || p.Omega.rows() != d || p.Omega.cols() != d ||
        p.Gamma.rows() != q || p.Gamma.cols() != q || p.Delta.rows() != d ||
        p.Delta.cols() != q)
        throw UnsupportedShape("SunParams: inconsistent block dimensions");
    if ((p.omega_bar.array() <= 0.0).any())
        throw DomainError("SunParams: omega_bar must be positive");
}

}  // namespace sun_detail

/// Keep a subset of observed coordinates. The latent block (gamma, Gamma) is
/// untouched; xi, omega_bar, the rows of Delta and the Omega block are
/// selected.
inline SunParams sun_marginalize(const SunParams& p, const std::vector<int>& keep) {
    sun_detail::check_params(p);
    const int d = p.dim();
    for (int k : keep)
        if (k < 0 || k >= d) throw UnsupportedShape("sun_marginalize: index out of range");
    SunParams out;
    out.xi = detail::select(p.xi, keep);
    out.gamma = p.gamma;
    out.omega_bar = detail::select(p.omega_bar, keep);
    out.Gamma = p.Gamma;
    out.Delta.resize(static_cast<Eigen::Index>(keep.size()), p.latent_dim());
    for (size_t i = 0; i < keep.size(); ++i) out.Delta.row(i) = p.Delta.row(keep[i]);
    out.Omega = detail::select(p.Omega, keep, keep);
    return out;
}

/// Conditional distribution of the target block given the observed values.
/// Applies the parameter maps
///   xi_c    = xi_1 + O_12 O_22^-1 (x_2 - xi_2)          (O = omega Omega omega)
///   gamma_c = gamma + Delta_2' Omega_22^-1 omega_2^-1 (x_2 - xi_2)
///   Gamma_c = Gamma - Delta_2' Omega_22^-1 Delta_2
///   Delta_c = Delta_1 - Omega_12 Omega_22^-1 Delta_2
///   Omega_c = Omega_11 - Omega_12 Omega_22^-1 Omega_21
/// and then restores the unit-diagonal convention: the Schur complement
/// Omega_c has diagonal s^2 <= 1, so its scale is pushed into omega_bar
/// (omega_bar_c = omega_bar_1 .* s, Omega_c and Delta_c divided by s). This
/// leaves the distribution unchanged.
inline SunParams sun_condition(const SunParams& p, const IndexSplit& split,
                               const Eigen::VectorXd& x_given) {
    sun_detail::check_params(p);
    check_split(split, p.dim());
    if (x_given.size() != static_cast<Eigen::Index>(split.given.size()))
        throw UnsupportedShape("sun_condition: x_given has length " +
                               std::to_string(x_given.size()) + ", expected " +
                               std::to_string(split.given.size()));
    const auto nt = static_cast<Eigen::Index>(split.target.size());
    const auto ng = static_cast<Eigen::Index>(split.given.size());
    const int q = p.latent_dim();

    const Eigen::VectorXd xi_g = detail::select(p.xi, split.given);
    const Eigen::VectorXd w_g = detail::select(p.omega_bar, split.given);
    const Eigen::MatrixXd o_gg = detail::select(p.Omega, split.given, split.given);
    const Eigen::MatrixXd o_tg = detail::select(p.Omega, split.target, split.given);
    Eigen::MatrixXd delta_g(ng, q), delta_t(nt, q);
    for (Eigen::Index i = 0; i < ng; ++i) delta_g.row(i) = p.Delta.row(split.given[i]);
    for (Eigen::Index i = 0; i < nt; ++i) delta_t.row(i) = p.Delta.row(split.target[i]);

    // z2 = omega_2^-1 (x_2 - xi_2); everything else is solves against
    // Omega_22 = L L'.
    const Eigen::VectorXd z2 = (x_given - xi_g).array() / w_g.array();
    const Eigen::MatrixXd L = cholesky(o_gg);
    const auto solve = [&](const Eigen::MatrixXd& b) {
        return L.transpose()
            .triangularView<Eigen::Upper>()
            .solve(L.triangularView<Eigen::Lower>().solve(b))
            .eval();
    };
    const Eigen::VectorXd o22inv_z2 = solve(z2);
    const Eigen::MatrixXd o22inv_delta2 = solve(delta_g);
    const Eigen::MatrixXd o22inv_o21 = solve(o_tg.transpose());

    SunParams out;
    out.xi = detail::select(p.xi, split.target) +
             detail::select(p.omega_bar, split.target).asDiagonal() * (o_tg * o22inv_z2);
    out.gamma = p.gamma + delta_g.transpose() * o22inv_z2;
    out.Gamma = p.Gamma - delta_g.transpose() * o22inv_delta2;
    out.Gamma = 0.5 * (out.Gamma + out.Gamma.transpose()).eval();
    Eigen::MatrixXd omega_raw = detail::select(p.Omega, split.target, split.target) -
                                o_tg * o22inv_o21;
    omega_raw = 0.5 * (omega_raw + omega_raw.transpose()).eval();
    const Eigen::MatrixXd delta_raw = delta_t - o_tg * o22inv_delta2;

    Eigen::VectorXd s(nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
        const double v = omega_raw(i, i);
        if (!(v > 0.0)) throw NotPositiveDefinite(static_cast<int>(i), v);
        s(i) = std::sqrt(v);
    }
    out.omega_bar = detail::select(p.omega_bar, split.target).cwiseProduct(s);
    out.Omega = s.cwiseInverse().asDiagonal() * omega_raw * s.cwiseInverse().asDiagonal();
    for (Eigen::Index i = 0; i < nt; ++i) out.Omega(i, i) = 1.0;
    out.Delta = s.cwiseInverse().asDiagonal() * delta_raw;
    return out;
}

/// n draws (rows) by rejection: draw (U0, U1) ~ N(0, Omega*), accept when
/// U0 + gamma > 0 componentwise, return xi + omega U1. Deterministic per
/// seed. If `acceptance_rate` is non-null it receives accepted/attempted.
/// Prints a warning when the acceptance rate drops below 1e-4 and gives up
/// (InsufficientAcceptance) if 10^7 attempts produce almost nothing.
inline Eigen::MatrixXd sun_sample(const SunParams& p, int n, Rng& rng,
                                  double* acceptance_rate = nullptr) {
    sun_detail::check_params(p);
    const int d = p.dim(), q = p.latent_dim();
    const Eigen::MatrixXd L = cholesky(p.omega_star());
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd z(q + d), u(q + d);
    long long attempts = 0;
    int accepted = 0;
    while (accepted < n) {
        ++attempts;
        for (int j = 0; j < q + d; ++j) z(j) = rng.normal();
        u.noalias() = L.triangularView<Eigen::Lower>() * z;
        bool ok = true;
        for (int j = 0; j < q; ++j)
            if (!(u(j) + p.gamma(j) > 0.0)) {
                ok = false;
                break;
            }
        if (!ok) {
            if (attempts >= 10'000'000 && accepted < attempts / 1'000'000)
                throw InsufficientAcceptance(
                    "sun_sample: acceptance rate below ~1e-6, giving up after " +
                    std::to_string(attempts) + " attempts");
            continue;
        }
        out.row(accepted) =
            (p.xi.array() + p.omega_bar.array() * u.tail(d).array()).transpose();
        ++accepted;
    }
    const double rate = static_cast<double>(accepted) / static_cast<double>(attempts);
    if (acceptance_rate) *acceptance_rate = rate;
    if (rate < 1e-4)
        std::cerr << "warning: sun_sample acceptance rate " << rate << " is very low\n";
    return out;
}

/// Monte Carlo log-density. The density is
///   phi_d(x - xi; O) * Phi_p(gamma + Delta' Omega^-1 omega^-1 (x - xi); Gamma
///   - Delta' Omega^-1 Delta) / Phi_p(gamma; Gamma)
/// with both orthant probabilities Phi_p estimated from n_mc Gaussian draws
/// (shared across numerator and denominator is NOT done: independent draws).
/// Returns (log-density estimate, standard error of the log estimate). For
/// p=1 both probabilities are exact normal CDFs and the error is 0.
inline std::pair<double, double> sun_logpdf_mc(const Eigen::VectorXd& x, const SunParams& p,
                                               int n_mc, Rng& rng) {
    sun_detail::check_params(p);
    if (x.size() != p.dim())
        throw UnsupportedShape("sun_logpdf_mc: x has wrong dimension");
    if (n_mc < 1000) throw DomainError("sun_logpdf_mc: n_mc must be at least 1000");
    const int d = p.dim(), q = p.latent_dim();

    const Eigen::MatrixXd full = p.full_scale();
    const double log_phi = mvn_logpdf(x, GaussianParams{p.xi, full});

    // a1 = gamma + Delta' Omega^-1 omega^-1 (x - xi), C1 = Gamma - Delta'
    // Omega^-1 Delta.
    const Eigen::MatrixXd L = cholesky(p.Omega);
    const auto solve = [&](const Eigen::MatrixXd& b) {
        return L.transpose()
            .triangularView<Eigen::Upper>()
            .solve(L.triangularView<Eigen::Lower>().solve(b))
            .eval();
    };
    const Eigen::VectorXd z = (x - p.xi).array() / p.omega_bar.array();
    const Eigen::VectorXd a1 = p.gamma + p.Delta.transpose() * solve(z);
    Eigen::MatrixXd c1 = p.Gamma - p.Delta.transpose() * solve(p.Delta);
    c1 = 0.5 * (c1 + c1.transpose()).eval();

    // P(N(0, C) <= a), exact for q = 1, Monte Carlo otherwise. Returns the
    // estimate and its standard error.
    const auto orthant = [&](const Eigen::VectorXd& a,
                             const Eigen::MatrixXd& c) -> std::pair<double, double> {
        if (q == 1) return {normal_cdf(a(0) / std::sqrt(c(0, 0))), 0.0};
        const Eigen::MatrixXd lc = cholesky(c);
        Eigen::VectorXd w(q);
        int hits = 0;
        for (int i = 0; i < n_mc; ++i) {
            for (int j = 0; j < q; ++j) w(j) = rng.normal();
            const Eigen::VectorXd v = lc.triangularView<Eigen::Lower>() * w;
            if ((v.array() <= a.array()).all()) ++hits;
        }
        const double est = static_cast<double>(hits) / n_mc;
        return {est, std::sqrt(est * (1.0 - est) / n_mc)};
    };

    const auto [num, num_se] = orthant(a1, c1);
    const auto [den, den_se] = orthant(p.gamma, p.Gamma);
    if (num <= 0.0 || den <= 0.0)
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    const double log_f = log_phi + std::log(num) - std::log(den);
    // Delta method: Var(log num - log den) = (se/num)^2 + (se/den)^2.
    const double se = std::sqrt((num_se / num) * (num_se / num) +
                                (den_se / den) * (den_se / den));
    return {log_f, se};
}

}  // namespace metacond
