#pragma once

#include <functional>
#include <span>

#include "pmsde/sde_model.hpp"

namespace pmsde {

/// Scalar test function f(t, x) with optional analytic derivatives; finite
/// differences (central, step max(1e-5, 1e-5|x_i|)) fill in the rest.
struct ScalarField {
    std::function<double(double, std::span<const double>)> value;
    std::function<double(double, std::span<const double>)> time_derivative;
    std::function<void(double, std::span<const double>, std::span<double>)> gradient;
    std::function<void(double, std::span<const double>, std::span<double>)> hessian;

    static ScalarField from_potential(const PotentialSpec& pot);
};

/// L(t) f = d_t f + <b, grad f> + 1/2 sum_ij (sigma sigma^T)_ij d2_ij f.
double apply_generator(const SdeModel& model, const ScalarField& f, double t,
                       std::span<const double> x);

} // namespace pmsde
