#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "metacond/rng.hpp"
#include "metacond/scoring.hpp"

using namespace metacond;

namespace {

// Closed-form CRPS of a normal predictive distribution.
double crps_normal(double mu, double sigma, double y) {
    const double z = (y - mu) / sigma;
    return sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / std::sqrt(pi));
}

double crps_bruteforce(const std::vector<double>& x, double y) {
    const auto m = x.size();
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        t1 += std::abs(x[i] - y);
        for (std::size_t j = 0; j < m; ++j) t2 += std::abs(x[i] - x[j]);
    }
    return t1 / m - t2 / (2.0 * m * m);
}

}  // namespace

TEST_CASE("crps sort-based form equals the brute-force double sum", "[scoring]") {
    Rng rng(17);
    std::vector<double> x(257);
    for (auto& v : x) v = rng.normal() * 2.0 + 0.3;
    for (double y : {-1.0, 0.0, 2.7})
        CHECK(crps(x, y) == Catch::Approx(crps_bruteforce(x, y)).epsilon(1e-12));
}

TEST_CASE("crps of gaussian ensembles approaches the closed form", "[scoring]") {
    Rng rng(29);
    const int m = 200000;
    std::vector<double> x(m);
    for (auto& v : x) v = rng.normal();
    CHECK(crps(x, 0.0) == Catch::Approx(crps_normal(0.0, 1.0, 0.0)).margin(5e-3));
    CHECK(crps(x, 1.3) == Catch::Approx(crps_normal(0.0, 1.0, 1.3)).margin(5e-3));
    // The reference constant itself.
    CHECK(crps_normal(0.0, 1.0, 0.0) ==
          Catch::Approx((std::sqrt(2.0) - 1.0) / std::sqrt(pi)).epsilon(1e-12));
}

TEST_CASE("crps vanishes for a perfect point forecast", "[scoring]") {
    const std::vector<double> x(64, 1.25);
    CHECK(crps(x, 1.25) == Catch::Approx(0.0).margin(1e-15));
    CHECK(crps(x, 2.25) == Catch::Approx(1.0).epsilon(1e-12));  // |x - y| exactly
}

TEST_CASE("energy score reduces to crps in one dimension", "[scoring]") {
    Rng rng(31);
    Eigen::MatrixXd ens(500, 1);
    for (int i = 0; i < 500; ++i) ens(i, 0) = rng.normal() * 1.4 - 0.2;
    const std::vector<double> flat(ens.data(), ens.data() + ens.rows());
    for (double y : {-0.7, 0.0, 1.1}) {
        CHECK(energy_score(ens, Eigen::VectorXd::Constant(1, y)) ==
              Catch::Approx(crps(flat, y)).epsilon(1e-12));
    }
}

TEST_CASE("energy score vanishes for perfect multivariate forecasts", "[scoring]") {
    Eigen::VectorXd y(3);
    y << 1.0, -2.0, 0.5;
    Eigen::MatrixXd ens = y.transpose().replicate(40, 1);
    CHECK(energy_score(ens, y) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("log score kde matches a hand-computed kernel density", "[scoring]") {
    const std::vector<double> single = {0.0};
    CHECK(log_score_kde(single, 0.0, 1.0) ==
          Catch::Approx(0.5 * std::log(2.0 * pi)).epsilon(1e-12));
    const std::vector<double> pair = {-1.0, 1.0};
    const double dens = 0.5 * (normal_pdf((0.5 + 1.0) / 0.5) + normal_pdf((0.5 - 1.0) / 0.5)) / 0.5;
    CHECK(log_score_kde(pair, 0.5, 0.5) == Catch::Approx(-std::log(dens)).epsilon(1e-12));
    // Far observations hit the density floor instead of infinity.
    CHECK(log_score_kde(single, 1e6, 0.5) == Catch::Approx(-std::log(1e-300)).epsilon(1e-6));
    CHECK_THROWS_AS(log_score_kde(single, 0.0, 0.0), DomainError);
}

TEST_CASE("variogram score on a tiny hand case", "[scoring]") {
    Eigen::VectorXd y(2);
    y << 0.0, 1.0;
    Eigen::MatrixXd ens(2, 2);
    ens << 0.0, 0.0,
           0.0, 2.0;
    const double mean_pow = 0.5 * (0.0 + std::sqrt(2.0));
    const double expected = (1.0 - mean_pow) * (1.0 - mean_pow);
    CHECK(variogram_score(ens, y, 0.5) == Catch::Approx(expected).epsilon(1e-12));
    // Perfect forecast: zero.
    Eigen::MatrixXd perfect = y.transpose().replicate(10, 1);
    CHECK(variogram_score(perfect, y, 0.5) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("energy distance separates distributions and vanishes on equals", "[scoring]") {
    Rng rng(41);
    const int n = 1500;
    Eigen::MatrixXd a(n, 2), b(n, 2), c(n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) {
            a(i, j) = rng.normal();
            b(i, j) = rng.normal();
            c(i, j) = rng.normal() + 3.0;
        }
    const double same = energy_distance(a, b);
    const double diff = energy_distance(a, c);
    CHECK(std::abs(same) < 0.05);
    CHECK(diff > 0.5);
    CHECK_THROWS_AS(energy_distance(a, Eigen::MatrixXd::Zero(3, 3)), UnsupportedShape);
}
