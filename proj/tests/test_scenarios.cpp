#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "metacond/marginals.hpp"
#include "metacond/mixture.hpp"
#include "metacond/rng.hpp"
#include "metacond/scenarios.hpp"

using namespace metacond;

TEST_CASE("scenario mixtures are well formed", "[scenarios]") {
    for (const Mixture& m : {benchmark_gmm_2d(), comparison_gmm_2d(), comparison_gmm_3d()}) {
        double total = 0.0;
        for (double w : m.weights) total += w;
        CHECK(total == Catch::Approx(1.0).margin(1e-12));
        for (const auto& c : m.components) {
            CHECK(c.dim() == m.dim());
            // PD check via the library cholesky (throws if not).
            CHECK_NOTHROW(cholesky(c.cov));
            CHECK((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    CHECK(benchmark_gmm_2d().dim() == 2);
    CHECK(comparison_gmm_3d().dim() == 3);
    CHECK(comparison_gmm_3d().n_components() == 3);
}

TEST_CASE("hand-written benchmark conditional cdf matches library conditioning", "[scenarios]") {
    const Mixture mix = benchmark_gmm_2d();
    const IndexSplit split{{0}, {1}};
    for (double x2 : {0.0, 1.0, 2.0, 3.0, -1.5}) {
        Eigen::VectorXd given(1);
        given << x2;
        const Mixture cond = mixture_condition(mix, split, given);
        const UnivariateMixture margin = mixture_margin(cond, 0);
        for (double x1 : {-6.0, -2.0, 0.0, 1.7, 4.0, 8.0}) {
            CHECK(benchmark_conditional_cdf(x1, x2) ==
                  Catch::Approx(gmm_cdf(x1, margin)).epsilon(1e-12));
        }
    }
}

TEST_CASE("meta benchmark conditional cdf agrees with the transform route", "[scenarios]") {
    const Mixture mix = benchmark_gmm_2d();
    const IndexSplit split{{0}, {1}};
    for (double x2 : {-0.7, 0.0, 1.2}) {
        Eigen::VectorXd given(1);
        given << gmm_quantile(normal_cdf(x2), mixture_margin(mix, 1));
        const UnivariateMixture margin = mixture_margin(mixture_condition(mix, split, given), 0);
        for (double x1 : {-2.0, 0.0, 0.9}) {
            const double z1 = gmm_quantile(normal_cdf(x1), mixture_margin(mix, 0));
            CHECK(benchmark_meta_conditional_cdf(x1, x2) ==
                  Catch::Approx(gmm_cdf(z1, margin)).epsilon(1e-12));
        }
    }
    // Monotone in x1, bounded.
    double prev = 0.0;
    for (int i = 0; i <= 40; ++i) {
        const double f = benchmark_meta_conditional_cdf(-4.0 + 0.2 * i, 0.5);
        CHECK(f >= prev);
        CHECK(f <= 1.0);
        prev = f;
    }
}

TEST_CASE("gmm scenario reproduces the benchmark moments", "[scenarios]") {
    Rng rng(123);
    const int n = 20000;
    const ScenarioData s = generate_scenario("gmm", n, rng);
    REQUIRE(s.columns == std::vector<std::string>{"x1", "x2"});
    REQUIRE(s.data.rows() == n);

    const Mixture mix = benchmark_gmm_2d();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (std::size_t k = 0; k < mix.weights.size(); ++k)
        mean += mix.weights[k] * mix.components[k].mean;
    for (int j = 0; j < 2; ++j) {
        const double m = s.data.col(j).mean();
        const double sd = std::sqrt((s.data.col(j).array() - m).square().sum() / (n - 1));
        CHECK(m == Catch::Approx(mean(j)).margin(5.0 * sd / std::sqrt(double(n))));
    }
}

TEST_CASE("meta-gmm scenario has standard normal margins", "[scenarios]") {
    Rng rng(321);
    const int n = 5000;
    const ScenarioData s = generate_scenario("meta-gmm", n, rng);
    for (int j = 0; j < 2; ++j) {
        std::vector<double> col(s.data.col(j).data(), s.data.col(j).data() + n);
        const double d = testutil::ks_statistic(col, [](double x) { return normal_cdf(x); });
        CHECK(d < testutil::ks_critical(n, 0.001));
    }
}

TEST_CASE("gmcm scenarios emit copula-scale uniforms", "[scenarios]") {
    Rng rng(55);
    const int n = 4000;
    for (const std::string name : {"gmcm-2d", "gmcm-3d"}) {
        Rng local = rng.split();
        const ScenarioData s = generate_scenario(name, n, local);
        REQUIRE(s.data.cols() == (name == "gmcm-2d" ? 2 : 3));
        CHECK(s.columns.front() == "u1");
        CHECK(s.data.minCoeff() > 0.0);
        CHECK(s.data.maxCoeff() < 1.0);
        for (Eigen::Index j = 0; j < s.data.cols(); ++j) {
            std::vector<double> col(s.data.col(j).data(), s.data.col(j).data() + n);
            const double d = testutil::ks_statistic(col, [](double u) { return u; });
            CHECK(d < testutil::ks_critical(n, 0.001));
        }
    }
}

TEST_CASE("scenario generation is deterministic per seed", "[scenarios]") {
    Rng a(7), b(7);
    const ScenarioData s1 = generate_scenario("gmm", 100, a);
    const ScenarioData s2 = generate_scenario("gmm", 100, b);
    CHECK((s1.data - s2.data).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(generate_scenario("nope", 10, a), DomainError);
    CHECK_THROWS_AS(generate_scenario("gmm", 0, a), DomainError);
}
