#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "metacond/errors.hpp"
#include "metacond/math.hpp"

namespace metacond {

/// Forward-mode scalar with a fixed-capacity tangent vector. Constants carry
/// an empty tangent (p = 0) so they cost nothing; parameters carry a tangent
/// of the full chart dimension. Copies only touch the active prefix, so the
/// per-operation cost scales with the number of differentiated parameters,
/// not with the capacity.
class Dual {
public:
    static constexpr int capacity = 192;

    Dual() : v_(0.0), p_(0) {}
    Dual(double value) : v_(value), p_(0) {}  // NOLINT: implicit by design

    /// Parameter i of a chart with n_params entries (seeded with e_i).
    static Dual var(double value, int i, int n_params) {
        if (n_params > capacity)
            throw UnsupportedShape("Dual: chart has " + std::to_string(n_params) +
                                   " parameters, capacity is " + std::to_string(capacity));
        Dual d;
        d.v_ = value;
        d.p_ = n_params;
        std::fill(d.g_, d.g_ + n_params, 0.0);
        d.g_[i] = 1.0;
        return d;
    }

    /// Value with an explicit tangent (gradient of length n_params).
    static Dual with_tangent(double value, const double* grad, int n_params) {
        Dual d;
        d.v_ = value;
        d.p_ = n_params;
        std::copy(grad, grad + n_params, d.g_);
        return d;
    }

    Dual(const Dual& o) : v_(o.v_), p_(o.p_) { std::copy(o.g_, o.g_ + o.p_, g_); }
    Dual& operator=(const Dual& o) {
        v_ = o.v_;
        p_ = o.p_;
        std::copy(o.g_, o.g_ + o.p_, g_);
        return *this;
    }

    double value() const { return v_; }
    int tangent_size() const { return p_; }
    double deriv(int i) const { return i < p_ ? g_[i] : 0.0; }

    Dual& operator+=(const Dual& o) {
        if (o.p_ > p_) grow(o.p_);
        for (int i = 0; i < o.p_; ++i) g_[i] += o.g_[i];
        v_ += o.v_;
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        if (o.p_ > p_) grow(o.p_);
        for (int i = 0; i < o.p_; ++i) g_[i] -= o.g_[i];
        v_ -= o.v_;
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        if (o.p_ > p_) grow(o.p_);
        for (int i = 0; i < p_; ++i) g_[i] = g_[i] * o.v_ + v_ * (i < o.p_ ? o.g_[i] : 0.0);
        v_ *= o.v_;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        r.v_ = a.v_ / b.v_;
        r.p_ = std::max(a.p_, b.p_);
        const double inv = 1.0 / b.v_;
        for (int i = 0; i < r.p_; ++i)
            r.g_[i] = ((i < a.p_ ? a.g_[i] : 0.0) - r.v_ * (i < b.p_ ? b.g_[i] : 0.0)) * inv;
        return r;
    }
    friend Dual operator-(const Dual& a) {
        Dual r;
        r.v_ = -a.v_;
        r.p_ = a.p_;
        for (int i = 0; i < a.p_; ++i) r.g_[i] = -a.g_[i];
        return r;
    }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v_ < b.v_; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v_ > b.v_; }

    friend Dual exp(const Dual& a) { return a.unary(std::exp(a.v_), std::exp(a.v_)); }
    friend Dual log(const Dual& a) { return a.unary(std::log(a.v_), 1.0 / a.v_); }
    friend Dual sqrt(const Dual& a) {
        const double s = std::sqrt(a.v_);
        return a.unary(s, 0.5 / s);
    }

    /// Standard normal CDF and density lifted to duals.
    friend Dual normal_cdf(const Dual& a) {
        return a.unary(normal_cdf(a.v_), normal_pdf(a.v_));
    }
    friend Dual normal_pdf(const Dual& a) {
        const double f = normal_pdf(a.v_);
        return a.unary(f, -a.v_ * f);
    }

private:
    void grow(int p) {
        std::fill(g_ + p_, g_ + p, 0.0);
        p_ = p;
    }
    Dual unary(double value, double slope) const {
        Dual r;
        r.v_ = value;
        r.p_ = p_;
        for (int i = 0; i < p_; ++i) r.g_[i] = slope * g_[i];
        return r;
    }

    double v_;
    int p_;
    double g_[capacity];
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }

/// log(sum exp) for duals (and doubles, via the templated callers).
inline Dual log_sum_exp_dual(const std::vector<Dual>& a) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& x : a) m = std::max(m, x.value());
    if (!std::isfinite(m)) return Dual(m);
    Dual s(0.0);
    for (const auto& x : a) s += exp(x - Dual(m));
    return Dual(m) + log(s);
}

}  // namespace metacond
