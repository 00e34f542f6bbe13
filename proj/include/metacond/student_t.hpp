#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/gaussian.hpp"
#include "metacond/math.hpp"
#include "metacond/rng.hpp"

namespace metacond {

/// Multivariate Student t with location `mean`, scale matrix `scale` (not the
/// covariance: cov = scale * dof/(dof-2) for dof > 2) and `dof` degrees of
/// freedom.
struct StudentTParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd scale;
    double dof = 1.0;

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Log-density
///   log G((v+d)/2) - log G(v/2) - (d/2) log(v pi) - 1/2 log|S|
///   - (v+d)/2 log(1 + q/v),  q = (x-mu)' S^-1 (x-mu).
inline double t_logpdf(const Eigen::VectorXd& x, const StudentTParams& p) {
    const int d = p.dim();
    if (x.size() != d)
        throw UnsupportedShape("t_logpdf: x has dimension " + std::to_string(x.size()) +
                               ", distribution has " + std::to_string(d));
    if (!(p.dof > 0.0)) throw DomainError("t_logpdf: dof must be positive");
    const Eigen::MatrixXd L = cholesky(p.scale);
    const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(x - p.mean);
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    const double q = y.squaredNorm();
    return std::lgamma(0.5 * (p.dof + d)) - std::lgamma(0.5 * p.dof) -
           0.5 * d * std::log(p.dof * pi) - 0.5 * log_det -
           0.5 * (p.dof + d) * std::log1p(q / p.dof);
}

/// Marginal over the kept coordinates: same dof, subsetted location/scale.
inline StudentTParams t_marginalize(const StudentTParams& p, const std::vector<int>& keep) {
    const GaussianParams g = gaussian_marginalize(GaussianParams{p.mean, p.scale}, keep);
    return StudentTParams{g.mean, g.cov, p.dof};
}

/// Conditional distribution of the target block: the Gaussian-style block
/// update of location and scale, the scale multiplied by (v + q2)/(v + m)
/// with q2 the observed block's squared Mahalanobis distance, and dof v + m
/// (m = number of conditioned-on coordinates).
inline StudentTParams t_condition(const StudentTParams& p, const IndexSplit& split,
                                  const Eigen::VectorXd& x_given) {
    check_split(split, p.dim());
    if (x_given.size() != static_cast<Eigen::Index>(split.given.size()))
        throw UnsupportedShape("t_condition: x_given has length " +
                               std::to_string(x_given.size()) + ", expected " +
                               std::to_string(split.given.size()));
    const auto m = static_cast<double>(split.given.size());

    const Eigen::VectorXd mu_g = detail::select(p.mean, split.given);
    const Eigen::MatrixXd s_gg = detail::select(p.scale, split.given, split.given);
    const Eigen::MatrixXd L = cholesky(s_gg);
    const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(x_given - mu_g);
    const double q2 = y.squaredNorm();

    const GaussianParams block =
        gaussian_condition(GaussianParams{p.mean, p.scale}, split, x_given);
    StudentTParams out;
    out.mean = block.mean;
    out.scale = ((p.dof + q2) / (p.dof + m)) * block.cov;
    out.dof = p.dof + m;
    return out;
}

/// n draws (rows): X = mu + L z / sqrt(w/v), w ~ chi-square(v). One
/// chi-square and d normals per row, in that order.
inline Eigen::MatrixXd t_sample(const StudentTParams& p, int n, Rng& rng) {
    const int d = p.dim();
    const Eigen::MatrixXd L = cholesky(p.scale);
    Eigen::MatrixXd out(n, d);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n; ++i) {
        const double w = rng.chi_square(p.dof);
        for (int j = 0; j < d; ++j) z(j) = rng.normal();
        out.row(i) = (p.mean + (L * z) / std::sqrt(w / p.dof)).transpose();
    }
    return out;
}

}  // namespace metacond
