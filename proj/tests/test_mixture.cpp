#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "metacond/mixture.hpp"

using namespace metacond;

namespace {

// Bimodal 2D reference mixture used across the suite.
Mixture reference_mixture() {
    Mixture mix;
    mix.weights = {0.3, 0.7};
    GaussianParams c1, c2;
    c1.mean.resize(2);
    c1.mean << 4.0, 2.0;
    c1.cov.resize(2, 2);
    c1.cov << 2.0, 1.0, 1.0, 1.0;
    c2.mean.resize(2);
    c2.mean << -2.0, 1.0;
    c2.cov.resize(2, 2);
    c2.cov << 1.0, 0.5, 0.5, 1.0;
    mix.components = {c1, c2};
    return mix;
}

}  // namespace

TEST_CASE("mixture logpdf reduces to the component logpdf for K=1", "[mixture]") {
    Rng rng(1);
    const GaussianParams p{Eigen::VectorXd::Zero(3), testutil::random_spd(3, rng)};
    Mixture mix{{1.0}, {p}};
    Eigen::VectorXd x(3);
    x << 0.3, -0.2, 1.0;
    CHECK(mixture_logpdf(x, mix) == Catch::Approx(mvn_logpdf(x, p)).epsilon(1e-15));
}

TEST_CASE("mixture logpdf is stable for vanishing weights", "[mixture]") {
    Mixture mix = reference_mixture();
    mix.weights = {1e-300, 1.0 - 1e-300};
    Eigen::VectorXd x(2);
    x << -2.0, 1.0;
    const double lp = mixture_logpdf(x, mix);
    CHECK(std::isfinite(lp));
    CHECK(lp == Catch::Approx(mvn_logpdf(x, mix.components[1])).epsilon(1e-12));
}

TEST_CASE("conditional mixture density obeys the factorization identity", "[mixture]") {
    // f(x_t | x_g) = f(x_t, x_g) / f(x_g) must hold exactly for the
    // analytically conditioned mixture; this is the core correctness oracle.
    Rng rng(202);
    for (int rep = 0; rep < 25; ++rep) {
        const int d = 4;
        const int K = 1 + static_cast<int>(rng.index(4));
        const Mixture mix = testutil::random_mixture(d, K, rng);
        const IndexSplit split{{1, 3}, {0, 2}};
        Eigen::VectorXd xg(2), xt(2), full(d);
        xg << rng.normal() * 2.0, rng.normal() * 2.0;
        xt << rng.normal() * 2.0, rng.normal() * 2.0;
        full(1) = xt(0), full(3) = xt(1), full(0) = xg(0), full(2) = xg(1);

        const Mixture cond = mixture_condition(mix, split, xg);
        const Mixture marg = mixture_marginalize(mix, split.given);
        CHECK(mixture_logpdf(xt, cond) ==
              Catch::Approx(mixture_logpdf(full, mix) - mixture_logpdf(xg, marg)).margin(1e-10));
        // Conditional weights are a distribution.
        double s = 0.0;
        for (double w : cond.weights) {
            CHECK(w >= 0.0);
            s += w;
        }
        CHECK(s == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("conditioning throws when every component underflows", "[mixture]") {
    const Mixture mix = reference_mixture();
    CHECK_THROWS_AS(
        mixture_condition(mix, IndexSplit{{0}, {1}}, Eigen::VectorXd::Constant(1, 1e160)),
        DegenerateConditioning);
}

TEST_CASE("marginalization keeps weights and projects moments", "[mixture]") {
    const Mixture mix = reference_mixture();
    const Mixture marg = mixture_marginalize(mix, {1});
    CHECK(marg.weights == mix.weights);
    CHECK(marg.components[0].mean(0) == 2.0);
    CHECK(marg.components[0].cov(0, 0) == 1.0);
    // Direct formula check of the marginal density.
    const double x = 0.7;
    const double direct = 0.3 * normal_pdf((x - 2.0) / 1.0) / 1.0 +
                          0.7 * normal_pdf((x - 1.0) / 1.0) / 1.0;
    CHECK(mixture_logpdf(Eigen::VectorXd::Constant(1, x), marg) ==
          Catch::Approx(std::log(direct)).epsilon(1e-12));
}

TEST_CASE("mixture sampling matches mixture moments", "[mixture]") {
    const Mixture mix = reference_mixture();
    Rng rng(31);
    const int n = 60000;
    const Eigen::MatrixXd s = mixture_sample(mix, n, rng);
    Eigen::VectorXd mean_expected = 0.3 * mix.components[0].mean + 0.7 * mix.components[1].mean;
    const Eigen::RowVectorXd mean = s.colwise().mean();
    CHECK((mean.transpose() - mean_expected).cwiseAbs().maxCoeff() < 0.05);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(2, 2);
    for (int k = 0; k < 2; ++k) {
        const auto& c = mix.components[static_cast<std::size_t>(k)];
        second += mix.weights[static_cast<std::size_t>(k)] *
                  (c.cov + c.mean * c.mean.transpose());
    }
    const Eigen::MatrixXd cov_expected = second - mean_expected * mean_expected.transpose();
    const Eigen::MatrixXd centered = s.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / n;
    CHECK((cov - cov_expected).cwiseAbs().maxCoeff() < 0.12);
}

TEST_CASE("em recovers a well-separated mixture from samples", "[mixture][em]") {
    const Mixture truth = reference_mixture();
    Rng rng(95);
    const Eigen::MatrixXd data = mixture_sample(truth, 2000, rng);
    std::vector<double> trace;
    EmConfig cfg;
    auto [fit, ll] = em_fit(data, 2, cfg, rng, &trace);

    // Monotone log-likelihood trace.
    for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] >= trace[i - 1] - 1e-9 * std::max(1.0, std::abs(trace[i - 1])));
    CHECK(ll == Catch::Approx(trace.back()).margin(1e-9));

    const auto perm = testutil::match_components(truth, fit);
    for (int k = 0; k < 2; ++k) {
        const auto& ref = truth.components[static_cast<std::size_t>(k)];
        const auto& est = fit.components[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
        CHECK(std::abs(fit.weights[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] -
                       truth.weights[static_cast<std::size_t>(k)]) < 0.05);
        CHECK((est.mean - ref.mean).cwiseAbs().maxCoeff() < 0.25);
        CHECK((est.cov - ref.cov).cwiseAbs().maxCoeff() < 0.35);
    }
}

TEST_CASE("em with K=1 gives the closed-form answer in one iteration", "[mixture][em]") {
    Rng rng(4);
    Eigen::MatrixXd data(50, 2);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 2; ++j) data(i, j) = rng.normal() + j;
    EmConfig cfg;
    cfg.ridge = 0.0;  // exact closed form
    cfg.n_restarts = 1;
    auto [fit, ll] = em_fit(data, 1, cfg, rng);
    const Eigen::RowVectorXd mu = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mu;
    const Eigen::MatrixXd cov = centered.transpose() * centered / data.rows();
    CHECK((fit.components[0].mean.transpose() - mu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fit.components[0].cov - cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(fit.weights[0] == 1.0);
    CHECK(std::isfinite(ll));
}

TEST_CASE("em reports singular fits when regularization is disabled", "[mixture][em]") {
    // A constant column with ridge=0 must fail with SingularComponent.
    Eigen::MatrixXd data(40, 2);
    Rng rng(8);
    for (int i = 0; i < 40; ++i) {
        data(i, 0) = rng.normal();
        data(i, 1) = 1.0;
    }
    EmConfig cfg;
    cfg.ridge = 0.0;
    CHECK_THROWS_AS(em_fit(data, 2, cfg, rng), Error);
}

TEST_CASE("em is deterministic given the seed", "[mixture][em]") {
    const Mixture truth = reference_mixture();
    Rng data_rng(12);
    const Eigen::MatrixXd data = mixture_sample(truth, 500, data_rng);
    EmConfig cfg;
    cfg.max_iter = 50;
    Rng r1(99), r2(99);
    auto [f1, ll1] = em_fit(data, 2, cfg, r1);
    auto [f2, ll2] = em_fit(data, 2, cfg, r2);
    CHECK(ll1 == ll2);
    for (int k = 0; k < 2; ++k) {
        CHECK(f1.weights[static_cast<std::size_t>(k)] == f2.weights[static_cast<std::size_t>(k)]);
        CHECK(f1.components[static_cast<std::size_t>(k)].mean ==
              f2.components[static_cast<std::size_t>(k)].mean);
        CHECK(f1.components[static_cast<std::size_t>(k)].cov ==
              f2.components[static_cast<std::size_t>(k)].cov);
    }
}
