#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/gmcm.hpp"
#include "metacond/marginals.hpp"
#include "metacond/math.hpp"
#include "metacond/mixture.hpp"
#include "metacond/rng.hpp"

namespace metacond {

namespace scenario_detail {

inline GaussianParams comp(std::initializer_list<double> mean,
                           std::initializer_list<double> cov) {
    const auto d = static_cast<Eigen::Index>(mean.size());
    GaussianParams g;
    g.mean.resize(d);
    g.cov.resize(d, d);
    Eigen::Index i = 0;
    for (double v : mean) g.mean(i++) = v;
    i = 0;
    for (double v : cov) {
        g.cov(i / d, i % d) = v;
        ++i;
    }
    return g;
}

}  // namespace scenario_detail

/// Two-component 2D benchmark mixture (the "known parameters" example).
inline Mixture benchmark_gmm_2d() {
    Mixture m;
    m.weights = {0.3, 0.7};
    m.components.push_back(scenario_detail::comp({4.0, 2.0}, {2.0, 1.0, 1.0, 1.0}));
    m.components.push_back(scenario_detail::comp({-2.0, 1.0}, {1.0, 0.5, 0.5, 1.0}));
    return m;
}

/// 2D configuration of the fitter-comparison study.
inline Mixture comparison_gmm_2d() {
    Mixture m;
    m.weights = {0.45, 0.55};
    m.components.push_back(
        scenario_detail::comp({5.15, 4.32}, {5.6, 2.3, 2.3, 8.27}));
    m.components.push_back(
        scenario_detail::comp({-20.07, 3.04}, {3.35, 1.0, 1.0, 1.16}));
    return m;
}

/// 3D configuration of the fitter-comparison study.
inline Mixture comparison_gmm_3d() {
    Mixture m;
    m.weights = {0.69, 0.163, 0.147};
    m.components.push_back(scenario_detail::comp(
        {1.19, 5.63, -9.67},
        {2.26, 1.33, -1.16, 1.33, 2.71, -1.36, -1.16, -1.36, 3.78}));
    m.components.push_back(scenario_detail::comp(
        {-6.75, 12.04, -8.44},
        {12.24, 4.14, -3.87, 4.14, 10.33, 2.76, -3.87, 2.76, 16.45}));
    m.components.push_back(scenario_detail::comp(
        {-5.92, -4.0, 2.58},
        {3.19, -0.38, 0.54, -0.38, 0.76, -0.02, 0.54, -0.02, 1.01}));
    return m;
}

/// Closed-form conditional CDF P(X1 <= x1 | X2 = x2) of benchmark_gmm_2d,
/// written out by hand so it is independent of the library's conditioning
/// code: the conditional is a two-component mixture with tilted weights
/// w_k ~ a_k phi(x2; mu_k2, S_k22), component means 4 + (x2 - 2) and
/// (x2 - 1)/2 - 2, and variances 1 and 0.75.
inline double benchmark_conditional_cdf(double x1, double x2) {
    const double w1 = 0.3 * normal_pdf((x2 - 2.0) / 1.0) / 1.0;
    const double w2 = 0.7 * normal_pdf((x2 - 1.0) / 1.0) / 1.0;
    const double t1 = normal_cdf((x1 - (4.0 + (x2 - 2.0))) / 1.0);
    const double t2 = normal_cdf((x1 - ((x2 - 1.0) / 2.0 - 2.0)) / std::sqrt(0.75));
    return (w1 * t1 + w2 * t2) / (w1 + w2);
}

/// Conditional CDF of the meta variant of the benchmark: the same copula
/// with standard normal margins. X_j = Phi^-1(F_j(Z_j)) coordinatewise, so
/// P(X1 <= x1 | X2 = x2) = F_{Z1|Z2}(F1^-1(Phi(x1)) | F2^-1(Phi(x2))).
inline double benchmark_meta_conditional_cdf(double x1, double x2) {
    const Mixture mix = benchmark_gmm_2d();
    const double z1 = gmm_quantile(normal_cdf(x1), mixture_margin(mix, 0));
    const double z2 = gmm_quantile(normal_cdf(x2), mixture_margin(mix, 1));
    return benchmark_conditional_cdf(z1, z2);
}

struct ScenarioData {
    Eigen::MatrixXd data;
    std::vector<std::string> columns;
};

/// Synthetic data generators addressable by name:
///   gmm      - raw draws from benchmark_gmm_2d
///   meta-gmm - same copula, standard normal margins
///   gmcm-2d  - copula-scale (uniform) draws from comparison_gmm_2d
///   gmcm-3d  - copula-scale (uniform) draws from comparison_gmm_3d
inline ScenarioData generate_scenario(const std::string& name, int n, Rng& rng) {
    if (n < 1) throw DomainError("generate_scenario: n must be positive");
    ScenarioData out;
    if (name == "gmm") {
        out.data = mixture_sample(benchmark_gmm_2d(), n, rng);
        out.columns = {"x1", "x2"};
    } else if (name == "meta-gmm") {
        const Eigen::MatrixXd u = gmcm_uniform_sample(benchmark_gmm_2d(), n, rng);
        out.data.resize(n, 2);
        for (Eigen::Index i = 0; i < u.rows(); ++i)
            for (Eigen::Index j = 0; j < u.cols(); ++j)
                out.data(i, j) = normal_quantile(u(i, j));
        out.columns = {"x1", "x2"};
    } else if (name == "gmcm-2d" || name == "gmcm-3d") {
        const Mixture mix = (name == "gmcm-2d") ? comparison_gmm_2d() : comparison_gmm_3d();
        out.data = gmcm_uniform_sample(mix, n, rng);
        for (int j = 0; j < out.data.cols(); ++j)
            out.columns.push_back("u" + std::to_string(j + 1));
    } else {
        throw DomainError("unknown scenario '" + name +
                          "' (expected gmm, meta-gmm, gmcm-2d, gmcm-3d)");
    }
    return out;
}

}  // namespace metacond
