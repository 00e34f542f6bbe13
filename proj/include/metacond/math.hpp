#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "metacond/errors.hpp"

namespace metacond {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double log_2pi = 1.837877066409345483560659472811235279;
inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934381868;
inline constexpr double sqrt_2 = 1.414213562373095048801688724209698079;

/// Standard normal density.
inline double normal_pdf(double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); }

/// Log of the standard normal density.
inline double normal_logpdf(double z) { return -0.5 * (log_2pi + z * z); }

/// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / sqrt_2); }

/// Standard normal quantile (Wichura's PPND16 rational approximation,
/// relative error below 1e-15 across the open unit interval).
/// Throws DomainError for p outside (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw DomainError("normal_quantile: p must lie in (0,1), got " + std::to_string(p));

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }

    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-9) * r +
                    1.84631831751005468180e-6) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

/// log(sum_i exp(a_i)) guarding against overflow. Empty input and all -inf
/// both give -inf.
inline double log_sum_exp(std::span<const double> a) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : a)
        if (x > m) m = x;
    if (!std::isfinite(m)) return m;  // all -inf (or an element is +inf)
    double s = 0.0;
    for (double x : a) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
    const double m = (a > b) ? a : b;
    if (!std::isfinite(m)) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace metacond
