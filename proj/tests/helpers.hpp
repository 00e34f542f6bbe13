#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "metacond/marginals.hpp"
#include "metacond/mixture.hpp"
#include "metacond/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_spd(int d, metacond::Rng& rng, double diag_boost = 0.5) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    Eigen::MatrixXd s = a * a.transpose() / d;
    s.diagonal().array() += diag_boost;
    return s;
}

inline metacond::Mixture random_mixture(int d, int K, metacond::Rng& rng,
                                        double mean_range = 4.0) {
    metacond::Mixture mix;
    mix.weights.resize(static_cast<std::size_t>(K));
    double total = 0.0;
    for (auto& w : mix.weights) total += (w = 0.2 + rng.uniform());
    for (auto& w : mix.weights) w /= total;
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd mu(d);
        for (int j = 0; j < d; ++j) mu(j) = rng.uniform(-mean_range, mean_range);
        mix.components.push_back(metacond::GaussianParams{mu, random_spd(d, rng)});
    }
    return mix;
}

inline metacond::UnivariateMixture random_univariate_mixture(int K, metacond::Rng& rng) {
    metacond::UnivariateMixture m;
    m.weights.resize(K);
    m.means.resize(K);
    m.sds.resize(K);
    double total = 0.0;
    for (int k = 0; k < K; ++k) total += (m.weights(k) = 0.05 + rng.uniform());
    m.weights /= total;
    for (int k = 0; k < K; ++k) {
        m.means(k) = rng.uniform(-8.0, 8.0);
        m.sds(k) = rng.uniform(0.3, 2.5);
    }
    return m;
}

/// Plain 200-step bisection quantile, used as an independent oracle for the
/// production solver.
inline double bisect_quantile(double u, const metacond::UnivariateMixture& m, int steps = 200) {
    const double zu = metacond::normal_quantile(u);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m.size(); ++k) {
        lo = std::min(lo, m.means(k) + m.sds(k) * zu);
        hi = std::max(hi, m.means(k) + m.sds(k) * zu);
    }
    lo -= 1e-6;
    hi += 1e-6;
    while (metacond::gmm_cdf(lo, m) > u) lo -= (hi - lo);
    while (metacond::gmm_cdf(hi, m) < u) hi += (hi - lo);
    for (int it = 0; it < steps; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (metacond::gmm_cdf(mid, m) < u)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const auto n = sample.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Asymptotic two-sided KS critical value at level alpha.
inline double ks_critical(std::size_t n, double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// Asymptotic two-sample KS critical value at level alpha.
inline double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) *
           std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

/// Two-sample two-sided KS statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Two-sample energy-distance test with a label-permutation null. Returns
/// (observed energy distance, max over n_perms permuted label assignments).
/// A single pass over all pooled pairs accumulates every permutation at once
/// via per-point label bitmasks (bit b = point belongs to "A" in permutation
/// b, top bit = the observed labeling).
inline std::pair<double, double> energy_permutation_gate(const Eigen::MatrixXd& a,
                                                         const Eigen::MatrixXd& b,
                                                         metacond::Rng& rng,
                                                         int n_perms = 19) {
    const int na = static_cast<int>(a.rows()), nb = static_cast<int>(b.rows());
    const int n = na + nb, d = static_cast<int>(a.cols());
    if (n_perms < 1 || n_perms > 31) throw std::invalid_argument("n_perms out of range");
    Eigen::MatrixXd pooled(n, d);
    pooled.topRows(na) = a;
    pooled.bottomRows(nb) = b;

    // Label masks: permutation b uses bit b; the observed labeling uses bit
    // n_perms.
    std::vector<std::uint32_t> mask(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < na; ++i) mask[static_cast<std::size_t>(i)] |= 1u << n_perms;
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int p = 0; p < n_perms; ++p) {
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(idx[static_cast<std::size_t>(i)],
                      idx[rng.index(static_cast<std::size_t>(i) + 1)]);
        for (int i = 0; i < na; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] |= 1u << p;
    }

    const int n_labels = n_perms + 1;
    const std::uint32_t all = (n_labels == 32) ? ~0u : ((1u << n_labels) - 1u);
    std::vector<double> s_aa(static_cast<std::size_t>(n_labels), 0.0);
    std::vector<double> s_bb(static_cast<std::size_t>(n_labels), 0.0);
    double total = 0.0;
    const double* data = pooled.data();  // column-major: data[j * n + i]
    for (int i = 0; i < n; ++i) {
        const std::uint32_t mi = mask[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = data[c * n + i] - data[c * n + j];
                sq += diff * diff;
            }
            const double dist = std::sqrt(sq);
            total += dist;
            std::uint32_t both_a = mi & mask[static_cast<std::size_t>(j)];
            std::uint32_t both_b = ~mi & ~mask[static_cast<std::size_t>(j)] & all;
            while (both_a) {
                s_aa[static_cast<std::size_t>(std::countr_zero(both_a))] += dist;
                both_a &= both_a - 1;
            }
            while (both_b) {
                s_bb[static_cast<std::size_t>(std::countr_zero(both_b))] += dist;
                both_b &= both_b - 1;
            }
        }
    }

    const auto ed = [&](int label) {
        const double saa = s_aa[static_cast<std::size_t>(label)];
        const double sbb = s_bb[static_cast<std::size_t>(label)];
        const double sab = total - saa - sbb;
        return 2.0 * sab / (static_cast<double>(na) * nb) -
               2.0 * saa / (static_cast<double>(na) * (na - 1)) -
               2.0 * sbb / (static_cast<double>(nb) * (nb - 1));
    };
    double null_max = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < n_perms; ++p) null_max = std::max(null_max, ed(p));
    return {ed(n_perms), null_max};
}

/// Minimal-cost matching of estimated components onto reference components
/// (cost = mean distance), by enumeration; fine for the small K used in tests.
inline std::vector<int> match_components(const metacond::Mixture& ref,
                                         const metacond::Mixture& est) {
    const int K = ref.n_components();
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (int k = 0; k < K; ++k)
            cost += (ref.components[static_cast<std::size_t>(k)].mean -
                     est.components[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])].mean)
                        .norm();
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace testutil
