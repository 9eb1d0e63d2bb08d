#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmsde/gaussian.hpp"

namespace pmsde {

/// Rectangular histogram grid: per-axis [lo, hi) split into uniform bins.
struct GridSpec {
    std::vector<double> lo, hi;
    std::vector<int> bins;

    int dim() const { return static_cast<int>(bins.size()); }
    long total_bins() const;
    void validate() const;
    /// Flat row-major bin index, or -1 when x falls outside the box.
    long flat_index(std::span<const double> x) const;
    double bin_width(int axis) const { return (hi[axis] - lo[axis]) / bins[axis]; }
    double cell_volume() const;

    bool operator==(const GridSpec& other) const = default;
};

/// Normalized histogram: bin masses plus the mass that fell outside the box.
struct EmpiricalMeasure {
    GridSpec grid;
    std::vector<double> masses;
    double out_of_box = 0.0;
    long n_samples = 0;
};

/// samples is n_rows x dim row-major.
EmpiricalMeasure empirical_measure(std::span<const double> samples, long n_rows,
                                   const GridSpec& grid);

/// 1/2 ( sum_bins |mu_i - nu_i| + |out_mu - out_nu| ); grids must match.
double tv_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Gaussian binned by exact cell integrals (1D and diagonal covariance) or
/// tensor Gauss-Legendre quadrature (full 2D covariance).
EmpiricalMeasure bin_gaussian(const GaussianMeasure& g, const GridSpec& grid);

double tv_to_gaussian(const EmpiricalMeasure& mu, const GaussianMeasure& g);

/// Freedman-Diaconis bins clamped to [20, 400] per axis, box = mean +- 8 std.
GridSpec default_grid_for(const GaussianMeasure& g, long n_samples);

struct NoiseFloor {
    double mean = 0.0;
    double sd = 0.0;
};

/// Expected TV between an n-sample histogram of law `target` and `target`
/// itself, estimated by multinomial resampling (B replicates).
NoiseFloor tv_noise_floor_vs_target(const EmpiricalMeasure& target, long n_samples, int replicates,
                                    std::uint64_t seed);

/// Expected TV between two independent histograms of the same law.
NoiseFloor tv_noise_floor_two_sample(const EmpiricalMeasure& pooled, long n1, long n2,
                                     int replicates, std::uint64_t seed);

struct KsResult {
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Two-sample Kolmogorov-Smirnov check at significance alpha.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha = 1e-3);

} // namespace pmsde
