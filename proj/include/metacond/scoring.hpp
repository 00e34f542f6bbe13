#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/math.hpp"

namespace metacond {

/// Continuous ranked probability score of an m-member ensemble against a
/// scalar observation, in the energy form
///   (1/m) sum_i |x_i - y|  -  1/(2 m^2) sum_{i,j} |x_i - x_j|.
/// The pairwise double sum is evaluated in O(m log m) through the adjacent
/// gaps of the order statistics: sum_{i<j}(x_(j) - x_(i)) weights gap k by
/// (k+1)(m-1-k). Every summand is nonnegative, so a point-mass ensemble at
/// y scores exactly zero instead of a cancellation residue. Lower is
/// better; the score is proper, and zero only for a point mass at y.
inline double crps(std::span<const double> ensemble, double y) {
    const std::size_t m = ensemble.size();
    if (m == 0) throw UnsupportedShape("crps: empty ensemble");
    std::vector<double> x(ensemble.begin(), ensemble.end());
    std::sort(x.begin(), x.end());
    double term1 = 0.0;
    for (double xi : x) term1 += std::abs(xi - y);
    term1 /= static_cast<double>(m);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k)
        s += (x[k + 1] - x[k]) * static_cast<double>(k + 1) * static_cast<double>(m - 1 - k);
    return term1 - s / (static_cast<double>(m) * static_cast<double>(m));
}

/// Negative log-likelihood of y under a Gaussian kernel density built from
/// the ensemble (bandwidth h). The density is floored at 1e-300 so empty
/// neighborhoods yield a large-but-finite penalty instead of infinity.
inline double log_score_kde(std::span<const double> ensemble, double y, double bandwidth = 0.5) {
    const std::size_t m = ensemble.size();
    if (m == 0) throw UnsupportedShape("log_score_kde: empty ensemble");
    if (!(bandwidth > 0.0)) throw DomainError("log_score_kde: bandwidth must be positive");
    std::vector<double> lp(m);
    for (std::size_t i = 0; i < m; ++i) lp[i] = normal_logpdf((y - ensemble[i]) / bandwidth);
    const double log_dens =
        log_sum_exp(lp) - std::log(static_cast<double>(m)) - std::log(bandwidth);
    return -std::max(log_dens, std::log(1e-300));
}

/// Multivariate energy score of an ensemble (rows = members) against a
/// vector observation: (1/m) sum ||x_i - y|| - 1/(2 m^2) sum ||x_i - x_j||.
/// Coincides with crps for d = 1.
inline double energy_score(const Eigen::MatrixXd& ensemble, const Eigen::VectorXd& y) {
    const auto m = ensemble.rows();
    if (m == 0) throw UnsupportedShape("energy_score: empty ensemble");
    if (ensemble.cols() != y.size())
        throw UnsupportedShape("energy_score: ensemble and observation dimensions differ");
    double term1 = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        term1 += (ensemble.row(i).transpose() - y).norm();
    term1 /= static_cast<double>(m);
    double term2 = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j)
            term2 += (ensemble.row(i) - ensemble.row(j)).norm();
    term2 = 2.0 * term2 / (static_cast<double>(m) * static_cast<double>(m));
    return term1 - 0.5 * term2;
}

/// Variogram score of order p with uniform weights:
///   sum_{i<j} ( |y_i - y_j|^p - (1/m) sum_k |x_ki - x_kj|^p )^2.
inline double variogram_score(const Eigen::MatrixXd& ensemble, const Eigen::VectorXd& y,
                              double p = 0.5) {
    const auto m = ensemble.rows();
    const auto d = ensemble.cols();
    if (m == 0) throw UnsupportedShape("variogram_score: empty ensemble");
    if (d != y.size())
        throw UnsupportedShape("variogram_score: ensemble and observation dimensions differ");
    double score = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) {
            double mean_pow = 0.0;
            for (Eigen::Index k = 0; k < m; ++k)
                mean_pow += std::pow(std::abs(ensemble(k, i) - ensemble(k, j)), p);
            mean_pow /= static_cast<double>(m);
            const double obs = std::pow(std::abs(y(i) - y(j)), p);
            score += (obs - mean_pow) * (obs - mean_pow);
        }
    return score;
}

/// Energy distance between two samples (rows = observations), as the
/// U-statistic with self-pairs excluded:
///   2/(nm) sum ||a_i - b_j|| - 1/(n(n-1)) sum_{i != j} ||a_i - a_j||
///                            - 1/(m(m-1)) sum_{i != j} ||b_i - b_j||.
/// Non-negative in expectation, zero iff the distributions coincide.
inline double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const auto n = a.rows(), m = b.rows();
    if (n < 2 || m < 2) throw UnsupportedShape("energy_distance: need at least 2 rows per sample");
    if (a.cols() != b.cols())
        throw UnsupportedShape("energy_distance: samples have different dimensions");
    double ab = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) ab += (a.row(i) - b.row(j)).norm();
    double aa = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) aa += (a.row(i) - a.row(j)).norm();
    double bb = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) bb += (b.row(i) - b.row(j)).norm();
    return 2.0 * ab / (static_cast<double>(n) * static_cast<double>(m)) -
           2.0 * aa / (static_cast<double>(n) * static_cast<double>(n - 1)) -
           2.0 * bb / (static_cast<double>(m) * static_cast<double>(m - 1));
}

}  // namespace metacond
