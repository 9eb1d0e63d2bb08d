#include "pmsde/generator.hpp"

#include <cmath>
#include <vector>

#include "pmsde/errors.hpp"

namespace pmsde {

namespace {

double fd_time_derivative(const ScalarField& f, double t, std::span<const double> x) {
    const double h = std::max(1e-5, 1e-5 * std::abs(t));
    return (f.value(t + h, x) - f.value(t - h, x)) / (2.0 * h);
}

void fd_gradient(const ScalarField& f, double t, std::span<const double> x,
                 std::span<double> out) {
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = std::max(1e-5, 1e-5 * std::abs(x[i]));
        const double xi = xp[i];
        xp[i] = xi + h;
        const double fp = f.value(t, xp);
        xp[i] = xi - h;
        const double fm = f.value(t, xp);
        xp[i] = xi;
        out[i] = (fp - fm) / (2.0 * h);
    }
}

void fd_hessian(const ScalarField& f, double t, std::span<const double> x, std::span<double> out) {
    const std::size_t d = x.size();
    std::vector<double> xp(x.begin(), x.end());
    const double f0 = f.value(t, xp);
    for (std::size_t i = 0; i < d; ++i) {
        const double hi = std::max(1e-5, 1e-5 * std::abs(x[i]));
        for (std::size_t j = i; j < d; ++j) {
            double v;
            if (i == j) {
                const double xi = xp[i];
                xp[i] = xi + hi;
                const double fp = f.value(t, xp);
                xp[i] = xi - hi;
                const double fm = f.value(t, xp);
                xp[i] = xi;
                v = (fp - 2.0 * f0 + fm) / (hi * hi);
            } else {
                const double hj = std::max(1e-5, 1e-5 * std::abs(x[j]));
                const double xi = xp[i], xj = xp[j];
                xp[i] = xi + hi; xp[j] = xj + hj;
                const double fpp = f.value(t, xp);
                xp[j] = xj - hj;
                const double fpm = f.value(t, xp);
                xp[i] = xi - hi; xp[j] = xj + hj;
                const double fmp = f.value(t, xp);
                xp[j] = xj - hj;
                const double fmm = f.value(t, xp);
                xp[i] = xi; xp[j] = xj;
                v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            }
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
}

} // namespace

ScalarField ScalarField::from_potential(const PotentialSpec& pot) {
    ScalarField f;
    f.value = pot.value;
    f.time_derivative = pot.time_derivative;
    f.gradient = pot.gradient;
    f.hessian = pot.hessian;
    return f;
}

double apply_generator(const SdeModel& model, const ScalarField& f, double t,
                       std::span<const double> x) {
    if (!f.value && !(f.time_derivative && f.gradient && f.hessian))
        throw ValidationError("apply_generator: field needs value() or full derivatives");
    const int d = model.dim;

    const double ft = f.time_derivative ? f.time_derivative(t, x) : fd_time_derivative(f, t, x);

    std::vector<double> grad(d);
    if (f.gradient) f.gradient(t, x, grad);
    else fd_gradient(f, t, x, grad);

    std::vector<double> hess(static_cast<std::size_t>(d) * d);
    if (f.hessian) f.hessian(t, x, hess);
    else fd_hessian(f, t, x, hess);

    std::vector<double> b(d);
    model.drift_at(t, x, b);
    const std::vector<double> a = model.diffusion_squared(t, x);

    double acc = ft;
    for (int i = 0; i < d; ++i) acc += b[i] * grad[i];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) acc += 0.5 * a[i * d + j] * hess[i * d + j];

    if (!std::isfinite(acc)) throw NumericalError("apply_generator: non-finite result");
    return acc;
}

} // namespace pmsde
