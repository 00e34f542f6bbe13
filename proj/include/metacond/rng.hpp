#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "metacond/math.hpp"

namespace metacond {

/// Deterministic random source. All distribution transforms are implemented
/// here (inverse-CDF normal, Marsaglia-Tsang gamma) instead of relying on
/// std::*_distribution, whose outputs differ across standard libraries; a
/// given seed therefore produces identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw strictly inside (0,1): (x >> 11) keeps the top 53 bits,
    /// the half-offset keeps both endpoints unreachable.
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the inverse CDF (one uniform per draw).
    double normal() { return normal_quantile(uniform()); }

    /// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 handled by the
    /// usual boost gamma(shape+1) * U^{1/shape}.
    double gamma(double shape) {
        if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

    /// Index in [0, n).
    std::size_t index(std::size_t n) {
        auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return (i >= n) ? n - 1 : i;
    }

    /// Categorical draw from (not necessarily normalized) non-negative weights.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double t = uniform() * total;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            t -= weights[k];
            if (t < 0.0) return k;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    /// Independent child stream. The drawn seed is scrambled (splitmix64
    /// finalizer) so consecutive children are decorrelated.
    Rng split() {
        std::uint64_t z = engine_() + 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

    /// Pre-split n child streams (for reproducible per-task randomness that
    /// does not depend on execution order).
    std::vector<Rng> split_n(std::size_t n) {
        std::vector<Rng> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(split());
        return out;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace metacond
