#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmsde/empirical.hpp"
#include "pmsde/gaussian.hpp"
#include "pmsde/integrators.hpp"
#include "pmsde/sde_model.hpp"

namespace pmsde {

/// TV(P^(s, s+nT, x0, .), target) against n, with a geometric fit R r^n over
/// the points that clear the Monte Carlo noise floor.
struct ConvergenceCurve {
    std::vector<int> ns;
    std::vector<double> tv_values;
    std::vector<double> mc_errors;   // per-point bootstrap spread
    double noise_floor = 0.0;        // expected TV of a same-law histogram
    double fitted_R = 0.0;
    double fitted_r = 0.0;
    double fit_residual = 0.0;       // rms residual of log TV
    int n_fit_points = 0;
    std::string verdict;             // geometric | inconclusive-converged | not-geometric
};

ConvergenceCurve convergence_curve(const SdeModel& model, double s, std::span<const double> x0,
                                   std::span<const int> ns, double dt, long n_paths,
                                   std::uint64_t seed, const GaussianMeasure& target,
                                   int n_workers = 0);

ConvergenceCurve convergence_curve(const SdeModel& model, double s, std::span<const double> x0,
                                   std::span<const int> ns, double dt, long n_paths,
                                   std::uint64_t seed, const EmpiricalMeasure& target,
                                   int n_workers = 0);

struct PhasePeriodicityEntry {
    double phase = 0.0;
    std::vector<double> mean;        // ensemble mean at the phase
    std::vector<double> std_error;
    double tv_phase_vs_next_period = 0.0;  // rho_hat(s) vs rho_hat(s+T), independent halves
    double tv_threshold = 0.0;
    bool periodic_ok = false;
};

struct PushForwardEntry {
    double from_phase = 0.0;
    double to_phase = 0.0;
    double tv = 0.0;
    double threshold = 0.0;
    bool ok = false;
};

struct PeriodicityReport {
    std::vector<PhasePeriodicityEntry> phases;
    std::vector<PushForwardEntry> push_forward;
    double max_mean_difference = 0.0;     // across phase pairs, max coordinate gap
    double mean_difference_threshold = 0.0;
    bool phase_dependence_significant = false;
    bool all_periodic = false;
};

/// Checks rho_hat(s_j) == rho_hat(s_j + T) (two-sample TV on independent path
/// halves), push-forward consistency between consecutive phases, and whether
/// the estimated measure genuinely moves within the period.
PeriodicityReport check_periodicity(const SdeModel& model, std::span<const double> phases,
                                    int burn_in_periods, long n_paths, double dt,
                                    std::uint64_t seed, std::span<const double> x0 = {},
                                    int n_workers = 0);

struct DoeblinEstimate {
    double eta = 0.0;                  // integral over K of the pointwise-min density
    EmpiricalMeasure phi;              // normalized minorizing measure on K
    std::vector<double> start_points;
    double bandwidth = 0.0;
    double eta_half_bandwidth = 0.0;   // sensitivity sweep
    double eta_double_bandwidth = 0.0;
    bool degenerate = false;           // eta effectively zero
    /// One-period kernel mass per phi-bin for each start point (same
    /// quadrature as phi), so p_hat >= eta * phi bin-wise by construction.
    std::vector<std::vector<double>> kernel_bin_mass;
};

/// Kernel-density minorization estimate for the one-period kernel of a 1D
/// model: eta = int_K min_i p_hat(s, s+T, x_i, y) dy with phi the normalized
/// minimum. Gaussian KDE, Silverman bandwidth times bandwidth_mult.
DoeblinEstimate doeblin_estimate(const SdeModel& model, double s, double k_lo, double k_hi,
                                 std::span<const double> start_grid, double dt,
                                 long n_paths_per_start, double bandwidth_mult,
                                 std::uint64_t seed, int phi_bins = 64, int n_workers = 0);

} // namespace pmsde
