#include <catch2/catch_amalgamated.hpp>

#include "metacond/optim.hpp"

using namespace metacond;

TEST_CASE("adam climbs a concave quadratic", "[optim]") {
    Eigen::VectorXd target(3);
    target << 1.0, -2.0, 0.5;
    auto fg = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXd r = x - target;
        return std::pair<double, Eigen::VectorXd>{-r.squaredNorm(), -2.0 * r};
    };
    const OptimResult res = adam_maximize(fg, Eigen::VectorXd::Zero(3), 20000, 1e-2, 1e-12, 25);
    CHECK((res.x - target).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(res.f == Catch::Approx(0.0).margin(1e-6));
    // Trace starts at the initial objective and the result is the best seen.
    CHECK(res.trace.front() == Catch::Approx(-target.squaredNorm()));
    CHECK(res.f == *std::max_element(res.trace.begin(), res.trace.end()));
}

TEST_CASE("adam stops early when stalled", "[optim]") {
    auto fg = [](const Eigen::VectorXd& x) {
        return std::pair<double, Eigen::VectorXd>{-x.squaredNorm(), -2.0 * x};
    };
    const OptimResult res =
        adam_maximize(fg, Eigen::VectorXd::Constant(1, 1e-9), 100000, 1e-3, 1e-8, 5);
    CHECK(res.iterations < 1000);
}

TEST_CASE("adam reports a non-finite objective", "[optim]") {
    auto fg = [](const Eigen::VectorXd& x) {
        const double f = (x(0) > 0.5) ? std::numeric_limits<double>::quiet_NaN() : x(0);
        return std::pair<double, Eigen::VectorXd>{f, Eigen::VectorXd::Ones(1)};
    };
    try {
        adam_maximize(fg, Eigen::VectorXd::Zero(1), 100000, 0.05, 1e-15, 50);
        FAIL("expected NonFiniteObjective");
    } catch (const NonFiniteObjective& e) {
        CHECK(e.iteration() > 0);
    }
}

TEST_CASE("nelder-mead finds the maximum of a smooth bowl", "[optim]") {
    Eigen::VectorXd target(4);
    target << 0.3, -1.1, 2.0, 0.0;
    auto f = [&](const Eigen::VectorXd& x) { return -(x - target).squaredNorm(); };
    const OptimResult res = nelder_mead_maximize(f, Eigen::VectorXd::Zero(4), 5000, 1e-14);
    CHECK((res.x - target).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(res.f == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("nelder-mead handles a banana-shaped ridge", "[optim]") {
    auto f = [](const Eigen::VectorXd& x) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        return -(a * a + 100.0 * b * b);
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const OptimResult res = nelder_mead_maximize(f, x0, 10000, 1e-14);
    CHECK(res.x(0) == Catch::Approx(1.0).margin(1e-3));
    CHECK(res.x(1) == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("nelder-mead survives NaN plateaus and rejects a NaN start", "[optim]") {
    auto f = [](const Eigen::VectorXd& x) {
        if (x(0) > 1.0) return std::numeric_limits<double>::quiet_NaN();
        return -(x(0) - 0.9) * (x(0) - 0.9);
    };
    const OptimResult res = nelder_mead_maximize(f, Eigen::VectorXd::Zero(1), 2000, 1e-14);
    CHECK(res.x(0) == Catch::Approx(0.9).margin(1e-4));

    auto bad = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(nelder_mead_maximize(bad, Eigen::VectorXd::Zero(1), 10, 1e-10),
                    NonFiniteObjective);
}
