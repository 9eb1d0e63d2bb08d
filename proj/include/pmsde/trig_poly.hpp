#pragma once

#include <cstddef>
#include <vector>

namespace pmsde {

/// T-periodic scalar function stored as a truncated Fourier series
///
///   f(t) = a0/2 + sum_n [ A_n cos(theta_n(t)) + B_n sin(theta_n(t)) ],
///   theta_n(t) = (2 n pi / T) t - n pi.
///
/// The -n pi phase offset is baked into every harmonic argument. Note
/// theta_n = n * phi with phi(t) = (2 pi / T) t - pi, so sums and products
/// of series sharing a period stay in this form.
class TrigPoly {
public:
    TrigPoly() = default;
    TrigPoly(double period, double a0, std::vector<double> cos_coeffs,
             std::vector<double> sin_coeffs);

    /// Constant function c (a0 = 2c, no harmonics).
    static TrigPoly constant(double c, double period = 1.0);

    /// Series given against plain arguments cos((2n pi/T) t), sin((2n pi/T) t);
    /// converts into the phase-offset storage convention.
    static TrigPoly from_standard(double period, double mean,
                                  std::vector<double> cos_std,
                                  std::vector<double> sin_std);

    double eval(double t) const;
    double deriv(double t) const;

    /// d/dt as a TrigPoly.
    TrigPoly derivative() const;

    TrigPoly scaled(double k) const;
    TrigPoly plus(const TrigPoly& other) const;
    TrigPoly times(const TrigPoly& other) const;

    /// sup_t |f(t)|  <=  |a0|/2 + sum (|A_n| + |B_n|).
    double sup_bound() const;
    /// sup_t |f'(t)| <=  sum omega_n (|A_n| + |B_n|).
    double deriv_sup_bound() const;

    bool is_constant() const { return harmonics() == 0; }
    std::size_t harmonics() const { return cos_.size(); }
    double period() const { return period_; }
    double a0() const { return a0_; }
    const std::vector<double>& cos_coeffs() const { return cos_; }
    const std::vector<double>& sin_coeffs() const { return sin_; }

private:
    double period_ = 1.0;
    double a0_ = 0.0;
    std::vector<double> cos_; // A_1..A_N
    std::vector<double> sin_; // B_1..B_N
};

} // namespace pmsde
