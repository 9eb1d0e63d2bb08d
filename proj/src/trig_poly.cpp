#include "pmsde/trig_poly.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pmsde/errors.hpp"

namespace pmsde {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

TrigPoly::TrigPoly(double period, double a0, std::vector<double> cos_coeffs,
                   std::vector<double> sin_coeffs)
    : period_(period), a0_(a0), cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {
    if (!(period_ > 0.0)) throw ValidationError("TrigPoly: period must be positive");
    const std::size_t n = std::max(cos_.size(), sin_.size());
    cos_.resize(n, 0.0);
    sin_.resize(n, 0.0);
}

TrigPoly TrigPoly::constant(double c, double period) {
    return TrigPoly(period, 2.0 * c, {}, {});
}

TrigPoly TrigPoly::from_standard(double period, double mean, std::vector<double> cos_std,
                                 std::vector<double> sin_std) {
    // cos((2n pi/T) t) = (-1)^n cos(theta_n), same for sin.
    const std::size_t n = std::max(cos_std.size(), sin_std.size());
    cos_std.resize(n, 0.0);
    sin_std.resize(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double sign = (k % 2 == 0) ? -1.0 : 1.0; // harmonic index is k+1
        cos_std[k] *= sign;
        sin_std[k] *= sign;
    }
    return TrigPoly(period, 2.0 * mean, std::move(cos_std), std::move(sin_std));
}

double TrigPoly::eval(double t) const {
    const double phi = kTwoPi / period_ * t - 3.14159265358979323846264338328;
    double acc = 0.5 * a0_;
    for (std::size_t k = 0; k < cos_.size(); ++k) {
        const double theta = static_cast<double>(k + 1) * phi;
        acc += cos_[k] * std::cos(theta) + sin_[k] * std::sin(theta);
    }
    return acc;
}

double TrigPoly::deriv(double t) const {
    const double phi = kTwoPi / period_ * t - 3.14159265358979323846264338328;
    double acc = 0.0;
    for (std::size_t k = 0; k < cos_.size(); ++k) {
        const double n = static_cast<double>(k + 1);
        const double omega = kTwoPi / period_ * n;
        const double theta = n * phi;
        acc += omega * (-cos_[k] * std::sin(theta) + sin_[k] * std::cos(theta));
    }
    return acc;
}

TrigPoly TrigPoly::derivative() const {
    std::vector<double> dc(cos_.size(), 0.0);
    std::vector<double> ds(sin_.size(), 0.0);
    for (std::size_t k = 0; k < cos_.size(); ++k) {
        const double omega = kTwoPi / period_ * static_cast<double>(k + 1);
        dc[k] = omega * sin_[k];
        ds[k] = -omega * cos_[k];
    }
    return TrigPoly(period_, 0.0, std::move(dc), std::move(ds));
}

TrigPoly TrigPoly::scaled(double k) const {
    std::vector<double> c = cos_;
    std::vector<double> s = sin_;
    for (auto& v : c) v *= k;
    for (auto& v : s) v *= k;
    return TrigPoly(period_, a0_ * k, std::move(c), std::move(s));
}

TrigPoly TrigPoly::plus(const TrigPoly& other) const {
    if (is_constant() && !other.is_constant())
        return TrigPoly(other.period_, a0_ + other.a0_, other.cos_, other.sin_);
    if (!is_constant() && other.is_constant())
        return TrigPoly(period_, a0_ + other.a0_, cos_, sin_);
    if (!is_constant() && !other.is_constant() &&
        std::abs(period_ - other.period_) > 1e-12 * period_)
        throw ValidationError("TrigPoly::plus: period mismatch");
    const std::size_t n = std::max(cos_.size(), other.cos_.size());
    std::vector<double> c(n, 0.0), s(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (k < cos_.size()) { c[k] += cos_[k]; s[k] += sin_[k]; }
        if (k < other.cos_.size()) { c[k] += other.cos_[k]; s[k] += other.sin_[k]; }
    }
    return TrigPoly(is_constant() ? other.period_ : period_, a0_ + other.a0_,
                    std::move(c), std::move(s));
}

TrigPoly TrigPoly::times(const TrigPoly& other) const {
    if (is_constant()) return other.scaled(0.5 * a0_);
    if (other.is_constant()) return scaled(0.5 * other.a0_);
    if (std::abs(period_ - other.period_) > 1e-12 * period_)
        throw ValidationError("TrigPoly::times: period mismatch");

    // Work with alpha_n (cos, n >= 0, alpha_0 = a0/2) and beta_n (sin, n >= 1)
    // in the variable phi; product-to-sum identities close the family.
    const std::size_t na = cos_.size(), nb = other.cos_.size();
    const std::size_t nr = na + nb;
    std::vector<double> ra(nr + 1, 0.0), rb(nr + 1, 0.0);
    auto alpha = [](const TrigPoly& f, std::size_t n) {
        return n == 0 ? 0.5 * f.a0_ : f.cos_[n - 1];
    };
    auto beta = [](const TrigPoly& f, std::size_t n) {
        return n == 0 ? 0.0 : f.sin_[n - 1];
    };
    auto add_cos = [&](std::size_t n, double v) { ra[n] += v; };
    auto add_sin = [&](long n, double v) {
        if (n > 0) rb[static_cast<std::size_t>(n)] += v;
        else if (n < 0) rb[static_cast<std::size_t>(-n)] -= v;
    };
    for (std::size_t m = 0; m <= na; ++m) {
        for (std::size_t n = 0; n <= nb; ++n) {
            const double am = alpha(*this, m), bm = beta(*this, m);
            const double an = alpha(other, n), bn = beta(other, n);
            const std::size_t sum = m + n;
            const std::size_t dif = m > n ? m - n : n - m;
            // cos*cos
            add_cos(dif, 0.5 * am * an);
            add_cos(sum, 0.5 * am * an);
            // sin*sin
            add_cos(dif, 0.5 * bm * bn);
            add_cos(sum, -0.5 * bm * bn);
            // sin_m * cos_n and cos_m * sin_n
            add_sin(static_cast<long>(m) - static_cast<long>(n), 0.5 * bm * an);
            add_sin(static_cast<long>(m + n), 0.5 * bm * an);
            add_sin(static_cast<long>(n) - static_cast<long>(m), 0.5 * am * bn);
            add_sin(static_cast<long>(m + n), 0.5 * am * bn);
        }
    }
    std::vector<double> c(ra.begin() + 1, ra.end());
    std::vector<double> s(rb.begin() + 1, rb.end());
    return TrigPoly(period_, 2.0 * ra[0], std::move(c), std::move(s));
}

double TrigPoly::sup_bound() const {
    double acc = 0.5 * std::abs(a0_);
    for (std::size_t k = 0; k < cos_.size(); ++k)
        acc += std::abs(cos_[k]) + std::abs(sin_[k]);
    return acc;
}

double TrigPoly::deriv_sup_bound() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < cos_.size(); ++k) {
        const double omega = kTwoPi / period_ * static_cast<double>(k + 1);
        acc += omega * (std::abs(cos_[k]) + std::abs(sin_[k]));
    }
    return acc;
}

} // namespace pmsde
