#pragma once

#include <cstdint>
#include <vector>

namespace pmsde {

/// Single Euler-Maruyama path on a uniform time grid (last step may be
/// shorter to land exactly on t_end).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> states;    // times.size() * dim, row-major
    int dim = 1;
    double dt = 0.0;
    std::uint64_t seed = 0;
    bool exploded = false;
    long first_bad_index = -1;     // index into times when exploded
};

/// Observations of the grid chain Z_n = X_{s + n T}.
struct GridChainSample {
    double phase = 0.0;            // s
    int n_periods = 0;
    double dt = 0.0;               // snapped to an exact divisor of T
    int dim = 1;
    std::uint64_t seed = 0;
    std::vector<int> recorded_ns;
    long n_paths = 0;              // surviving paths (rows per block)
    long n_exploded = 0;
    /// One block per recorded n: n_paths x dim, row-major.
    std::vector<std::vector<double>> samples;
};

/// Per-phase snapshots X_{s_j + burn_in T} from a shared path ensemble.
struct PhaseEnsemble {
    std::vector<double> phases;    // snapped onto the step grid, in [0, T)
    double dt = 0.0;
    int burn_in_periods = 0;
    int dim = 1;
    std::uint64_t seed = 0;
    long n_paths = 0;
    long n_exploded = 0;
    std::vector<std::vector<double>> samples;  // [phase][row * dim + k]
};

} // namespace pmsde
