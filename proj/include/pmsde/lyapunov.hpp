#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmsde/generator.hpp"
#include "pmsde/sde_model.hpp"
#include "pmsde/trig_poly.hpp"

namespace pmsde {

/// Polynomial in x with T-periodic trigonometric coefficients,
///   V(t, x) = sum_k v_k(t) x^k    (1D state).
/// Closed under d/dt, d/dx and products, which makes the generator of a
/// polynomial-drift model computable coefficient-wise.
struct PolyField1D {
    double period = 1.0;
    std::vector<TrigPoly> coeffs; // v_0..v_K

    static PolyField1D constant(double c, double period);
    static PolyField1D monomial(int k, double coef, double period);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double eval(double t, double x) const;
    PolyField1D dt() const;
    PolyField1D dx() const;
    PolyField1D plus(const PolyField1D& other) const;
    PolyField1D scaled(double k) const;
    PolyField1D times(const PolyField1D& other) const;

    ScalarField to_scalar_field() const;
};

/// Drift-condition verdict with the constants it certifies (or refutes) and
/// the worst grid point found.
struct DriftWitness {
    double t = 0.0;
    std::vector<double> x;
    double margin = 0.0; // negative = inequality violated there
};

struct DriftReport {
    std::string verdict; // certified | falsified | inconclusive
    std::map<std::string, double> constants;
    DriftWitness witness;
    std::string grid_spec;
    std::string tail_argument; // empty when no analytic tail bound applies
    /// Worst margin per time-slice of the search grid (for CSV export).
    std::vector<double> time_grid;
    std::vector<double> worst_margin_per_time;
};

/// Checks 2 <b(t,x), x> <= c - lambda ||x||^2 on [0,T] x [-R,R]^d. Polynomial
/// drifts get a leading-term tail certificate beyond the grid; other models
/// can only be falsified or left inconclusive outside the box.
DriftReport verify_weak_dissipativity(const SdeModel& model, double c, double lambda, double radius,
                                      int grid_density, int time_points = 512);

/// Explicit constants for an odd-degree polynomial drift: lambda is half the
/// smallest |leading| and c doubles the per-coordinate envelope sum so the
/// pair satisfies the two-sided form above.
DriftReport classify_poly_drift(const PolyDriftSpec& spec);

/// Checks L(t)V <= C - lambda V. The PolyField1D overload composes the
/// generator symbolically for 1D polynomial-drift models and can certify via
/// the same tail argument; the ScalarField overload is grid-only.
DriftReport verify_geometric_drift(const SdeModel& model, const PolyField1D& v, double big_c,
                                   double lambda, double radius, int grid_density,
                                   int time_points = 512);
DriftReport verify_geometric_drift(const SdeModel& model, const ScalarField& v, double big_c,
                                   double lambda, double radius, int grid_density,
                                   int time_points = 512);

struct VDecayCheckpoint {
    double t = 0.0;
    double mc_mean = 0.0;
    double std_error = 0.0;
    double envelope = 0.0; // e^{-lambda (t-s)} V(s,x0) + C/lambda (1 - e^{-lambda (t-s)}) + 4 SE
    bool ok = false;
};

struct VDecayReport {
    std::vector<VDecayCheckpoint> checkpoints;
    bool all_ok = false;
    long n_exploded = 0;
};

/// Monte Carlo check of the expected-V decay envelope along the flow.
VDecayReport validate_v_decay(const SdeModel& model, const ScalarField& v, double big_c,
                              double lambda, double s, std::span<const double> x0, double horizon,
                              double dt, long n_paths, std::uint64_t seed, int n_checkpoints = 10,
                              int n_workers = 0);

} // namespace pmsde
