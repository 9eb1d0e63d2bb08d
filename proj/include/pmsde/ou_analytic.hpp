#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pmsde/gaussian.hpp"
#include "pmsde/sde_model.hpp"
#include "pmsde/trig_poly.hpp"

namespace pmsde {

/// Periodically forced Ornstein-Uhlenbeck process
///   dX = (S(t) - A X) dt + sigma dW,   A = M^{-1} D M,  D = diag(lambda_i > 0),
/// with closed-form kernel, periodic measure and 1D geometric TV bound.
class OuModel {
public:
    OuModel(Eigen::MatrixXd eigvecs, Eigen::VectorXd eigvals, Eigen::MatrixXd sigma,
            std::vector<TrigPoly> forcing, double period);

    /// Scalar convenience: dX = (S(t) - alpha X) dt + sigma dW.
    static OuModel scalar(double alpha, double sigma, TrigPoly forcing);

    int dim() const { return dim_; }
    double period() const { return period_; }
    const Eigen::MatrixXd& a_matrix() const { return a_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::VectorXd& eigvals() const { return eigvals_; }
    const std::vector<TrigPoly>& forcing() const { return forcing_; }
    /// xi as a trigonometric series, one component per coordinate.
    const std::vector<TrigPoly>& xi_series() const { return xi_; }

    /// Long-term periodic mean xi(t) = int_{-inf}^t e^{-A(t-r)} S(r) dr.
    Eigen::VectorXd xi(double t) const;
    Eigen::VectorXd xi_derivative(double t) const;

    /// J(s,t) = xi(t) - e^{-(t-s)A} xi(s) = int_s^t e^{-(t-r)A} S(r) dr.
    Eigen::VectorXd j_integral(double s, double t) const;

    /// Law of X_t given X_s = x.
    GaussianMeasure transition_kernel(double s, double t, const Eigen::VectorXd& x) const;

    /// rho_s = N(xi(s), M^{-1} C M^{-T}).
    GaussianMeasure periodic_measure(double s) const;

    Eigen::MatrixXd exp_minus_a(double tau) const;

    /// Grid-chain TV bound for the 1D model:
    ///   e^{-n T alpha} sqrt(alpha/2) (R_s / sigma) (x^2 + 1),
    /// R_s = max{1 + gamma, r_s + sigma^2/(4 alpha) / (1 - e^{-2 alpha delta})},
    /// r_s = xi(s)^2 (1 + gamma) / gamma.
    double geometric_tv_bound(double s, double x, int n, double delta, double gamma = 1.0) const;

    /// Simulation view of the same dynamics.
    SdeModel to_sde_model() const;

private:
    int dim_;
    double period_;
    Eigen::MatrixXd m_, minv_, a_, sigma_;
    Eigen::VectorXd eigvals_;
    std::vector<TrigPoly> forcing_;
    std::vector<TrigPoly> xi_;       // per-coordinate series in the original basis
    Eigen::MatrixXd forced_cov_;     // N = M sigma sigma^T M^T
};

/// Quadrature fallback for xi: truncated integral over [t - K T, t] with K
/// chosen so the dropped tail is below 1e-12.
Eigen::VectorXd xi_by_quadrature(const OuModel& model, double t, double tol = 1e-10);

} // namespace pmsde
