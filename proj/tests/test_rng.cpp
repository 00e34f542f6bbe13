#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "metacond/rng.hpp"

using namespace metacond;

TEST_CASE("rng streams are deterministic per seed", "[rng]") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const double xa = a.uniform(), xb = b.uniform(), xc = c.uniform();
        all_equal = all_equal && (xa == xb);
        any_diff = any_diff || (xa != xc);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform stays strictly inside (0,1) with the right moments", "[rng]") {
    Rng rng(7);
    const int n = 20000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    const double mean = s / n;
    CHECK(mean == Catch::Approx(0.5).margin(0.01));
    CHECK(s2 / n - mean * mean == Catch::Approx(1.0 / 12.0).margin(0.01));
}

TEST_CASE("normal draws pass a KS test against the normal cdf", "[rng]") {
    Rng rng(11);
    std::vector<double> z(20000);
    for (auto& v : z) v = rng.normal();
    const double d = testutil::ks_statistic(z, [](double x) { return normal_cdf(x); });
    CHECK(d < testutil::ks_critical(z.size(), 0.001));
}

TEST_CASE("gamma and chi-square have the right first two moments", "[rng]") {
    Rng rng(5);
    const int n = 40000;
    for (double shape : {0.7, 1.0, 2.5, 8.0}) {
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = rng.gamma(shape);
            REQUIRE(g > 0.0);
            s += g;
            s2 += g * g;
        }
        const double mean = s / n, var = s2 / n - mean * mean;
        CHECK(mean == Catch::Approx(shape).margin(5.0 * std::sqrt(shape / n) + 0.01));
        CHECK(var == Catch::Approx(shape).epsilon(0.1));
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.chi_square(4.0);
    CHECK(s / n == Catch::Approx(4.0).margin(0.1));
}

TEST_CASE("categorical frequencies follow the weights", "[rng]") {
    Rng rng(19);
    const std::vector<double> w = {0.2, 0.5, 0.3};
    std::vector<int> counts(3, 0);
    const int n = 30000;
    for (int i = 0; i < n; ++i) counts[rng.categorical(w)]++;
    for (int k = 0; k < 3; ++k)
        CHECK(static_cast<double>(counts[k]) / n == Catch::Approx(w[k]).margin(0.015));
}

TEST_CASE("split produces decorrelated child streams", "[rng]") {
    Rng rng(3);
    Rng c1 = rng.split();
    Rng c2 = rng.split();
    // Child streams differ from each other and from the parent's continuation.
    int dif12 = 0, dif1p = 0;
    for (int i = 0; i < 100; ++i) {
        const double a = c1.uniform(), b = c2.uniform(), p = rng.uniform();
        dif12 += (a != b);
        dif1p += (a != p);
    }
    CHECK(dif12 == 100);
    CHECK(dif1p == 100);
    // Splitting is itself deterministic.
    Rng r1(3), r2(3);
    CHECK(r1.split().uniform() == r2.split().uniform());
}
