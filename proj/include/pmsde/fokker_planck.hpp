#pragma once

#include <span>
#include <vector>

#include "pmsde/empirical.hpp"
#include "pmsde/sde_model.hpp"

namespace pmsde {

/// Cell-centered 1D finite-volume grid for the Fokker-Planck solver.
struct FpGrid {
    double x_lo = -1.0, x_hi = 1.0;
    int nx = 16;   // cells
    int nt = 16;   // time steps per period

    double dx() const { return (x_hi - x_lo) / nx; }
    double cell_center(int i) const { return x_lo + (i + 0.5) * dx(); }
    void validate() const;
};

/// Density of the periodic measure over one period: slice k is q(k T/nt, .).
struct PeriodicDensity {
    FpGrid grid;
    double period = 0.0;
    std::vector<double> values;   // (nt+1) x nx, slice-major
    int iterations = 0;
    double residual = 0.0;        // L1 gap between slice 0 and slice nt
    long clip_events = 0;
    double boundary_mass = 0.0;   // mass of the two outermost cells, final slice
    bool converged = false;

    std::span<const double> slice(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * grid.nx,
                static_cast<std::size_t>(grid.nx)};
    }
};

/// Conservative flux-form discretization of
///   L* q = -d_x(b q) + 1/2 d_xx(sigma^2 q)
/// with zero-flux boundary truncation. Returns the density time derivative.
std::vector<double> fp_operator_apply(const SdeModel& model, double t, std::span<const double> q,
                                      const FpGrid& grid);

struct EvolveStats {
    double mass_drift = 0.0;
    long clip_events = 0;
};

/// Marches d_t q = L*(t) q over [0, T] with half-implicit time weighting;
/// conserves mass and clips stray negative cells (counted).
std::vector<double> evolve_one_period(const SdeModel& model, std::span<const double> q0,
                                      const FpGrid& grid, EvolveStats* stats = nullptr);

/// Fixed point of the period map by power iteration: stops when the L1 gap
/// between successive period-start slices drops below tol. `init` may be
/// empty (broad Gaussian default).
PeriodicDensity solve_periodic(const SdeModel& model, const FpGrid& grid,
                               std::span<const double> init = {}, int max_iters = 400,
                               double tol = 1e-8);

/// Normalized measures at the requested phases, linearly interpolated in
/// time between stored slices.
std::vector<EmpiricalMeasure> density_to_measures(const PeriodicDensity& pd,
                                                  std::span<const double> phases);

/// Merge 1D histogram bins by an integer factor (bins must divide evenly).
EmpiricalMeasure coarsen_measure(const EmpiricalMeasure& m, int factor);

} // namespace pmsde
