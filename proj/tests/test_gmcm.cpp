#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "metacond/gmcm.hpp"

using namespace metacond;

namespace {

Mixture latent_2d_2k() {
    Mixture mix;
    mix.weights = {0.35, 0.65};
    GaussianParams c1, c2;
    c1.mean.resize(2);
    c1.mean << 0.0, 0.0;
    c1.cov.resize(2, 2);
    c1.cov << 1.0, 0.55, 0.55, 1.0;
    c2.mean.resize(2);
    c2.mean << 2.5, -1.5;
    c2.cov.resize(2, 2);
    c2.cov << 1.4, -0.5, -0.5, 0.9;
    mix.components = {c1, c2};
    return mix;
}

}  // namespace

TEST_CASE("chart round-trips standardized parameters", "[gmcm]") {
    Rng rng(3);
    const GmcmParams p = standardize(GmcmParams{testutil::random_mixture(2, 3, rng), false});
    const UnconstrainedGmcm chart = chart_from_params(p);
    REQUIRE(chart.theta.size() == UnconstrainedGmcm::n_params(2, 3));
    const GmcmParams q = params_from_chart(chart);
    for (int k = 0; k < 3; ++k) {
        CHECK(q.mixture.weights[static_cast<std::size_t>(k)] ==
              Catch::Approx(p.mixture.weights[static_cast<std::size_t>(k)]).margin(1e-12));
        CHECK((q.mixture.components[static_cast<std::size_t>(k)].mean -
               p.mixture.components[static_cast<std::size_t>(k)].mean)
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        CHECK((q.mixture.components[static_cast<std::size_t>(k)].cov -
               p.mixture.components[static_cast<std::size_t>(k)].cov)
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("any chart point maps to canonically pinned parameters", "[gmcm]") {
    Rng rng(5);
    const int d = 3, K = 2;
    Eigen::VectorXd theta(UnconstrainedGmcm::n_params(d, K));
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = rng.normal();
    const GmcmParams p = params_from_chart(UnconstrainedGmcm{d, K, theta});
    CHECK(p.standardized);
    CHECK(p.mixture.components[0].mean.cwiseAbs().maxCoeff() == 0.0);
    for (int j = 0; j < d; ++j)
        CHECK(p.mixture.components[0].cov(j, j) == Catch::Approx(1.0).margin(1e-13));
    double wsum = 0.0;
    for (double w : p.mixture.weights) wsum += w;
    CHECK(wsum == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("single-component copula equals the Gaussian copula closed form", "[gmcm]") {
    const double rho = 0.6;
    GmcmParams p;
    p.standardized = true;
    p.mixture.weights = {1.0};
    GaussianParams c;
    c.mean = Eigen::VectorXd::Zero(2);
    c.cov.resize(2, 2);
    c.cov << 1.0, rho, rho, 1.0;
    p.mixture.components = {c};

    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd u(1, 2);
        u << rng.uniform(), rng.uniform();
        const double z1 = normal_quantile(u(0, 0)), z2 = normal_quantile(u(0, 1));
        const double det = 1.0 - rho * rho;
        // log c(u) = -0.5 log|R| - 0.5 z'(R^-1 - I)z.
        const double quad =
            (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / det - (z1 * z1 + z2 * z2);
        const double expected = -0.5 * std::log(det) - 0.5 * quad;
        CHECK(gmcm_loglik(u, p) == Catch::Approx(expected).margin(1e-10));
    }
}

TEST_CASE("copula loglik is invariant under diagonal affine maps", "[gmcm]") {
    const Mixture base = latent_2d_2k();
    Rng rng(11);
    const Eigen::MatrixXd u = gmcm_uniform_sample(base, 60, rng);

    Mixture moved = base;
    const Eigen::Vector2d a(2.0, 0.5), b(1.0, -3.0);
    for (auto& c : moved.components) {
        c.mean = (a.array() * c.mean.array()).matrix() + b;
        c.cov = a.asDiagonal() * c.cov * a.asDiagonal();
    }
    const double ll1 = gmcm_loglik(u, GmcmParams{base, false});
    const double ll2 = gmcm_loglik(u, GmcmParams{moved, false});
    CHECK(std::abs(ll1 - ll2) < 1e-7);
}

TEST_CASE("standardize is idempotent and loglik-preserving", "[gmcm]") {
    const GmcmParams p{latent_2d_2k(), false};
    const GmcmParams s1 = standardize(p);
    const GmcmParams s2 = standardize(s1);
    CHECK(s1.mixture.components[0].mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.mixture.components[0].cov(0, 0) == Catch::Approx(1.0).margin(1e-14));
    for (int k = 0; k < 2; ++k) {
        CHECK((s2.mixture.components[static_cast<std::size_t>(k)].mean -
               s1.mixture.components[static_cast<std::size_t>(k)].mean)
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
        CHECK((s2.mixture.components[static_cast<std::size_t>(k)].cov -
               s1.mixture.components[static_cast<std::size_t>(k)].cov)
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
    }
    Rng rng(13);
    const Eigen::MatrixXd u = gmcm_uniform_sample(p.mixture, 40, rng);
    CHECK(std::abs(gmcm_loglik(u, p) - gmcm_loglik(u, s1)) < 1e-8);
}

TEST_CASE("analytic copula gradient matches central finite differences", "[gmcm]") {
    Rng rng(17);
    const struct {
        int d, K;
    } cases[] = {{2, 2}, {3, 1}, {2, 3}};
    for (const auto& cs : cases) {
        const Mixture truth = testutil::random_mixture(cs.d, cs.K, rng, 2.0);
        const Eigen::MatrixXd u = gmcm_uniform_sample(truth, 40, rng);
        UnconstrainedGmcm chart = chart_from_params(standardize(GmcmParams{truth, false}));
        // Shift off the optimum so the gradient is not near zero.
        for (Eigen::Index i = 0; i < chart.theta.size(); ++i) chart.theta(i) += 0.2 * rng.normal();

        const auto [f0, grad] = gmcm_grad(u, chart);
        CHECK(std::isfinite(f0));
        const double h = 1e-5;
        double worst = 0.0;
        for (Eigen::Index t = 0; t < chart.theta.size(); ++t) {
            Eigen::VectorXd tp = chart.theta, tm = chart.theta;
            tp(t) += h;
            tm(t) -= h;
            const double fd = (gmcm_loglik_chart(u, tp, cs.d, cs.K) -
                               gmcm_loglik_chart(u, tm, cs.d, cs.K)) /
                              (2.0 * h);
            worst = std::max(worst, std::abs(fd - grad(t)));
        }
        CHECK(worst / std::max(1.0, grad.cwiseAbs().maxCoeff()) < 1e-4);
        // The chart objective and the mixture-level objective agree.
        CHECK(gmcm_loglik_chart(u, chart.theta, cs.d, cs.K) ==
              Catch::Approx(gmcm_loglik(u, params_from_chart(chart))).margin(1e-8));
    }
}

TEST_CASE("gradient fitter recovers a Gaussian copula correlation", "[gmcm][fit]") {
    const double rho = 0.6;
    Mixture truth;
    truth.weights = {1.0};
    GaussianParams c;
    c.mean = Eigen::VectorXd::Zero(2);
    c.cov.resize(2, 2);
    c.cov << 1.0, rho, rho, 1.0;
    truth.components = {c};

    Rng rng(23);
    const Eigen::MatrixXd u = gmcm_uniform_sample(truth, 600, rng);
    FitOptions opts;
    opts.max_iter = 400;
    const GmcmFit fit = fit_gmcm(u, 1, opts, rng);
    const Eigen::MatrixXd& cov = fit.params.mixture.components[0].cov;
    CHECK(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)) == Catch::Approx(rho).margin(0.08));
    CHECK(fit.loglik >= fit.trace.front() - 1e-9);
}

TEST_CASE("all three fitters produce standardized parameters", "[gmcm][fit]") {
    Rng rng(29);
    const Eigen::MatrixXd u = gmcm_uniform_sample(latent_2d_2k(), 200, rng);
    for (FitOptions::Method m :
         {FitOptions::Method::ad, FitOptions::Method::fd, FitOptions::Method::pem}) {
        FitOptions opts;
        opts.method = m;
        opts.max_iter = 60;
        Rng fit_rng(101);
        const GmcmFit fit = fit_gmcm(u, 2, opts, fit_rng);
        INFO(method_name(m));
        CHECK(fit.params.standardized);
        CHECK(fit.params.mixture.components[0].mean.cwiseAbs().maxCoeff() < 1e-9);
        for (int j = 0; j < 2; ++j)
            CHECK(fit.params.mixture.components[0].cov(j, j) == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(!fit.trace.empty());
        CHECK(fit.loglik >= fit.trace.front() - 1e-9);
        CHECK(std::isfinite(gmcm_loglik(u, fit.params)));
    }
}

TEST_CASE("fitter comparison produces a complete finite grid", "[gmcm][fit]") {
    Rng rng(31);
    FitOptions opts;
    opts.max_iter = 80;
    const CompareReport report = compare_fitters(latent_2d_2k(), 150, 1, opts, rng);
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        INFO(method_name(row.method));
        CHECK(row.ok);
        CHECK(std::isfinite(row.loglik));
        CHECK(std::isfinite(row.energy_distance));
    }
    CHECK(std::isfinite(report.mean_loglik(FitOptions::Method::ad)));
}

TEST_CASE("pseudo-observations outside the open unit cube are rejected", "[gmcm]") {
    Eigen::MatrixXd u(2, 2);
    u << 0.5, 0.5, 1.0, 0.5;
    FitOptions opts;
    Rng rng(1);
    CHECK_THROWS_AS(fit_gmcm(u, 1, opts, rng), DomainError);
    CHECK_THROWS_AS(gmcm_loglik(u, GmcmParams{latent_2d_2k(), false}), DomainError);
}
