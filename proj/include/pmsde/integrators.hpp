#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmsde/sde_model.hpp"
#include "pmsde/trajectory.hpp"

namespace pmsde {

/// x + b(t,x) dt + sigma(t,x) dW. Returns false when the result is
/// non-finite or leaves the ||x|| <= 1e12 safety ball.
bool em_step(const SdeModel& model, double t, std::span<const double> x, double dt,
             std::span<const double> dw, std::span<double> out);

/// Deterministic function of all inputs; same seed gives a bit-identical path.
Trajectory simulate_path(const SdeModel& model, double s, std::span<const double> x0, double t_end,
                         double dt, std::uint64_t seed);

/// Shared ensemble kernel: n_paths independent paths from (s, x0), states
/// captured at the requested step indices. Path p consumes the RNG stream
/// (seed, p) only, so results do not depend on worker count or scheduling.
struct EnsembleRequest {
    double start_time = 0.0;
    std::vector<double> x0;
    std::vector<double> x0_per_path;  // optional n_paths x dim; overrides x0
    double dt = 1e-3;
    long n_steps = 0;
    std::vector<long> record_steps;   // sorted, unique, within [0, n_steps]
    long n_paths = 1;
    std::uint64_t seed = 0;
    int n_workers = 0;                // 0 = library default
};

struct EnsembleResult {
    long n_paths = 0;
    int dim = 1;
    double dt = 0.0;
    std::vector<long> record_steps;
    /// [record][path * dim + k]; NaN once a path has exploded.
    std::vector<std::vector<double>> records;
    std::vector<std::uint8_t> exploded;
    long n_exploded = 0;
};

EnsembleResult run_ensemble(const SdeModel& model, const EnsembleRequest& req);

/// Snaps dt to T / round(T / dt).
double snap_dt_to_period(double period, double dt);

/// Grid-chain sampler: records X_{s+nT} for n in {record_every, 2*record_every,
/// ...} plus n_periods. Exploded paths are dropped (error if more than 1%).
GridChainSample sample_grid_chain(const SdeModel& model, double s, std::span<const double> x0,
                                  int n_periods, double dt, long n_paths, std::uint64_t seed,
                                  int record_every = 0, int n_workers = 0);

/// One ensemble, one record per phase: X at time burn_in*T + (phase mod T).
PhaseEnsemble sample_phase_ensemble(const SdeModel& model, std::span<const double> phases,
                                    int burn_in_periods, long n_paths, double dt,
                                    std::uint64_t seed, std::span<const double> x0 = {},
                                    int n_workers = 0);

/// Column means and (unbiased) variances of one record block.
void block_mean_var(const std::vector<double>& block, long n_rows, int dim,
                    std::span<double> mean, std::span<double> var);

} // namespace pmsde
