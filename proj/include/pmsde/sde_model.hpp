#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmsde/trig_poly.hpp"

namespace pmsde {

enum class ModelKind { generic, ou, polynomial, gradient, langevin };

std::string to_string(ModelKind kind);

using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// Fills a dim x dim row-major matrix.
using DiffusionFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

/// Coordinate-wise odd-degree polynomial drift
///   b_i(t, x) = sum_{k=0}^{2p_i - 1} S_k^i(t) x_i^k,
/// time-periodic coefficients for k <= 2p_i - 2 and a constant leading term.
struct PolyCoordSpec {
    int degree = 1;                 // p_i >= 1
    std::vector<TrigPoly> coeffs;   // S_0..S_{2p-2}, exactly 2p-1 entries
    double leading = -1.0;          // S_{2p-1}

    double drift_eval(double t, double u) const;
};

struct PolyDriftSpec {
    double period = 1.0;
    std::vector<PolyCoordSpec> coords;

    int dim() const { return static_cast<int>(coords.size()); }
    void validate() const;
};

/// Time-periodic potential with optional analytic derivatives; missing ones
/// fall back to central finite differences of value().
struct PotentialSpec {
    std::function<double(double, std::span<const double>)> value;
    std::function<void(double, std::span<const double>, std::span<double>)> gradient;
    std::function<double(double, std::span<const double>)> time_derivative;
    std::function<void(double, std::span<const double>, std::span<double>)> hessian;

    double value_at(double t, std::span<const double> x) const;
    void gradient_at(double t, std::span<const double> x, std::span<double> out) const;
    double time_derivative_at(double t, std::span<const double> x) const;
    void hessian_at(double t, std::span<const double> x, std::span<double> out) const;
};

/// A T-periodic SDE  dX = b(t, X) dt + sigma(t, X) dW  on R^d.
/// Immutable after construction; drift/diffusion must be pure functions,
/// safe to evaluate concurrently.
struct SdeModel {
    int dim = 1;
    double period = 1.0;
    ModelKind kind = ModelKind::generic;
    DriftFn drift;
    DiffusionFn diffusion;
    bool constant_diffusion = false;
    std::vector<double> sigma_const;           // row-major dim x dim when constant
    std::optional<PolyDriftSpec> poly_spec;    // set when drift is coordinate-wise polynomial

    void drift_at(double t, std::span<const double> x, std::span<double> out) const;
    void diffusion_at(double t, std::span<const double> x, std::span<double> out) const;
    /// sigma sigma^T at (t, x), row-major dim x dim.
    std::vector<double> diffusion_squared(double t, std::span<const double> x) const;
};

SdeModel make_generic_model(int dim, double period, DriftFn drift, DiffusionFn diffusion);

SdeModel make_constant_diffusion_model(int dim, double period, DriftFn drift,
                                       std::vector<double> sigma_row_major,
                                       ModelKind kind = ModelKind::generic);

/// dX = (-X^3 + X + A cos(omega t)) dt + sigma dW.  Period 2 pi / omega,
/// by convention 1 when omega == 0.
SdeModel build_duffing(double amplitude, double omega, double sigma);

SdeModel build_poly_drift_model(PolyDriftSpec spec, std::vector<double> sigma_row_major);
SdeModel build_poly_drift_model(PolyDriftSpec spec, DiffusionFn diffusion, bool constant_diffusion,
                                std::vector<double> sigma_row_major = {});

/// dX = -grad V(t, X) dt + sigma dW.
SdeModel build_gradient_model(PotentialSpec pot, int dim, double period,
                              std::vector<double> sigma_row_major);

/// Second-order dynamics  dq = p dt, dp = (-gamma p + F(t, q)) dt + sigma dW
/// as a 2d-dimensional phase-space model with degenerate block noise.
SdeModel build_langevin_model(
    std::function<void(double, std::span<const double>, std::span<double>)> force, int force_dim,
    double period, double gamma, std::vector<double> sigma_row_major);

/// Spot-check of coefficient periodicity on random (t, x) samples.
bool coefficients_periodic(const SdeModel& model, double tol = 1e-10, int n_samples = 64,
                           std::uint64_t seed = 0x5eed);

} // namespace pmsde
