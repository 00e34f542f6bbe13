#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/math.hpp"
#include "metacond/rng.hpp"

namespace metacond {

/// Mean vector and covariance matrix of a multivariate normal.
struct GaussianParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Disjoint index blocks for conditioning: `target` are the coordinates we
/// keep a distribution over, `given` are the coordinates we observe.
struct IndexSplit {
    std::vector<int> target;
    std::vector<int> given;
};

/// Validates an index split against dimension d: indices in range, no
/// duplicates, no overlap, both blocks non-empty.
inline void check_split(const IndexSplit& split, int d) {
    if (split.target.empty() || split.given.empty())
        throw UnsupportedShape("index split: target and given must both be non-empty");
    std::vector<char> seen(static_cast<std::size_t>(d), 0);
    auto mark = [&](const std::vector<int>& idx, const char* name) {
        for (int i : idx) {
            if (i < 0 || i >= d)
                throw UnsupportedShape(std::string("index split: ") + name + " index " +
                                       std::to_string(i) + " outside [0," + std::to_string(d) + ")");
            if (seen[static_cast<std::size_t>(i)]++)
                throw UnsupportedShape(std::string("index split: index ") + std::to_string(i) +
                                       " appears twice");
        }
    };
    mark(split.target, "target");
    mark(split.given, "given");
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// optionally ridged (m + ridge*I). No jitter is applied implicitly: a pivot
/// at or below 1e-300 throws NotPositiveDefinite carrying the pivot index.
inline Eigen::MatrixXd cholesky(const Eigen::MatrixXd& m, double ridge = 0.0) {
    const auto n = m.rows();
    if (n != m.cols()) throw UnsupportedShape("cholesky: matrix must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10 * scale)
                throw UnsupportedShape("cholesky: matrix is not symmetric");

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = m(j, j) + ridge;
        for (Eigen::Index k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
        if (!(pivot > 1e-300)) throw NotPositiveDefinite(static_cast<int>(j), pivot);
        L(j, j) = std::sqrt(pivot);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = m(i, j) + (i == j ? ridge : 0.0);
            for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

/// Log-density of x under the given normal, evaluated through the Cholesky
/// factor (never forms the inverse).
inline double mvn_logpdf(const Eigen::VectorXd& x, const GaussianParams& p) {
    if (x.size() != p.mean.size())
        throw UnsupportedShape("mvn_logpdf: x has dimension " + std::to_string(x.size()) +
                               ", distribution has " + std::to_string(p.mean.size()));
    const Eigen::MatrixXd L = cholesky(p.cov);
    const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(x - p.mean);
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * log_2pi + log_det + y.squaredNorm());
}

/// Same, but with the Cholesky factor precomputed (hot loops).
inline double mvn_logpdf_chol(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& L) {
    const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(x - mean);
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * log_2pi + log_det + y.squaredNorm());
}

namespace detail {

inline Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
    return out;
}

inline Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                              const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    return out;
}

}  // namespace detail

/// Conditional distribution of the target block given observed values on the
/// given block: mean mu_t + S_tg S_gg^-1 (x - mu_g), covariance
/// S_tt - S_tg S_gg^-1 S_gt. When the two blocks are independent the target
/// parameters pass through bit-identically.
inline GaussianParams gaussian_condition(const GaussianParams& p, const IndexSplit& split,
                                         const Eigen::VectorXd& x_given) {
    check_split(split, p.dim());
    if (x_given.size() != static_cast<Eigen::Index>(split.given.size()))
        throw UnsupportedShape("gaussian_condition: x_given has length " +
                               std::to_string(x_given.size()) + ", expected " +
                               std::to_string(split.given.size()));

    const Eigen::VectorXd mu_t = detail::select(p.mean, split.target);
    const Eigen::VectorXd mu_g = detail::select(p.mean, split.given);
    const Eigen::MatrixXd s_tt = detail::select(p.cov, split.target, split.target);
    const Eigen::MatrixXd s_tg = detail::select(p.cov, split.target, split.given);
    const Eigen::MatrixXd s_gg = detail::select(p.cov, split.given, split.given);

    const Eigen::MatrixXd L = cholesky(s_gg);
    // W = S_gg^-1 S_gt via two triangular solves.
    Eigen::MatrixXd W = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(s_tg.transpose()));
    W = L.transpose().triangularView<Eigen::Upper>().solve(W);

    GaussianParams out;
    out.mean = mu_t + W.transpose() * (x_given - mu_g);
    out.cov = s_tt - s_tg * W;
    return out;
}

/// Marginal distribution over the kept coordinates (order preserved).
inline GaussianParams gaussian_marginalize(const GaussianParams& p, const std::vector<int>& keep) {
    if (keep.empty()) throw UnsupportedShape("gaussian_marginalize: keep must be non-empty");
    std::vector<char> seen(static_cast<std::size_t>(p.dim()), 0);
    for (int i : keep) {
        if (i < 0 || i >= p.dim())
            throw UnsupportedShape("gaussian_marginalize: index " + std::to_string(i) +
                                   " outside [0," + std::to_string(p.dim()) + ")");
        if (seen[static_cast<std::size_t>(i)]++)
            throw UnsupportedShape("gaussian_marginalize: index " + std::to_string(i) +
                                   " appears twice");
    }
    return GaussianParams{detail::select(p.mean, keep), detail::select(p.cov, keep, keep)};
}

/// n i.i.d. draws (one per row), generated as mean + L z with z filled
/// row-by-row so the stream layout is independent of Eigen storage order.
inline Eigen::MatrixXd gaussian_sample(const GaussianParams& p, int n, Rng& rng) {
    const int d = p.dim();
    const Eigen::MatrixXd L = cholesky(p.cov);
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) z(j) = rng.normal();
        out.row(i) = (p.mean + L * z).transpose();
    }
    return out;
}

}  // namespace metacond
