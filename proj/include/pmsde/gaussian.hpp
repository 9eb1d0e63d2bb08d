#pragma once

#include <Eigen/Dense>

namespace pmsde {

/// Gaussian measure N(mean, cov) on R^d.
struct GaussianMeasure {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    GaussianMeasure() = default;
    GaussianMeasure(Eigen::VectorXd m, Eigen::MatrixXd c);

    int dim() const { return static_cast<int>(mean.size()); }

    /// Throws unless cov is symmetric to 1e-12 with eigenvalues >= -1e-12.
    void validate() const;
};

/// KL(P || Q) for Gaussians; Q.cov must be strictly positive definite.
double kl_gaussian(const GaussianMeasure& p, const GaussianMeasure& q);

/// sqrt(KL(P||Q) / 2) — TV upper bound via Pinsker.
double pinsker_tv_bound(const GaussianMeasure& p, const GaussianMeasure& q);

/// Exact 1D total variation 1/2 int |p - q| by adaptive quadrature split at
/// the density crossing points, over means +- 10 std.
double tv_gaussian_1d(const GaussianMeasure& p, const GaussianMeasure& q, double tol = 1e-10);

/// N(mean, var) mass of the interval [a, b].
double gaussian_interval_mass(double mean, double var, double a, double b);

} // namespace pmsde
