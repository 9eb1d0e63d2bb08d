#include "pmsde/ou_analytic.hpp"

#include <cmath>
#include <memory>

#include "pmsde/errors.hpp"
#include "pmsde/quadrature.hpp"

namespace pmsde {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Response of x' + lambda x = A cos(theta_n) + B sin(theta_n) in the same
/// harmonic: amplitude mixing by (lambda, omega_n) / (lambda^2 + omega_n^2).
void harmonic_response(double lambda, double omega, double a_in, double b_in, double& a_out,
                       double& b_out) {
    const double den = lambda * lambda + omega * omega;
    a_out = (lambda * a_in - omega * b_in) / den;
    b_out = (omega * a_in + lambda * b_in) / den;
}

} // namespace

OuModel::OuModel(Eigen::MatrixXd eigvecs, Eigen::VectorXd eigvals, Eigen::MatrixXd sigma,
                 std::vector<TrigPoly> forcing, double period)
    : dim_(static_cast<int>(eigvals.size())),
      period_(period),
      m_(std::move(eigvecs)),
      sigma_(std::move(sigma)),
      eigvals_(std::move(eigvals)),
      forcing_(std::move(forcing)) {
    if (!(period_ > 0.0)) throw ValidationError("OuModel: period must be positive");
    if (m_.rows() != dim_ || m_.cols() != dim_)
        throw ValidationError("OuModel: eigvecs must be d x d");
    if (sigma_.rows() != dim_ || sigma_.cols() != dim_)
        throw ValidationError("OuModel: sigma must be d x d");
    if (static_cast<int>(forcing_.size()) != dim_)
        throw ValidationError("OuModel: need one forcing series per coordinate");
    for (int i = 0; i < dim_; ++i)
        if (!(eigvals_(i) > 0.0)) throw ValidationError("OuModel: eigenvalues must be positive");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd_m(m_);
    if (svd_m.singularValues()(dim_ - 1) <= 0.0 ||
        svd_m.singularValues()(0) / svd_m.singularValues()(dim_ - 1) > 1e12)
        throw ValidationError("OuModel: eigvecs matrix is numerically singular");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_s(sigma_);
    if (svd_s.singularValues()(dim_ - 1) <= 0.0 ||
        svd_s.singularValues()(0) / svd_s.singularValues()(dim_ - 1) > 1e12)
        throw ValidationError("OuModel: sigma is numerically singular");

    minv_ = m_.inverse();
    a_ = minv_ * eigvals_.asDiagonal() * m_;
    forced_cov_ = m_ * sigma_ * sigma_.transpose() * m_.transpose();

    // xi, harmonic by harmonic in the eigenbasis, mapped back through M^{-1}.
    std::vector<TrigPoly> tilde;
    tilde.reserve(dim_);
    for (int i = 0; i < dim_; ++i) {
        TrigPoly acc = TrigPoly::constant(0.0, period_);
        for (int j = 0; j < dim_; ++j) acc = acc.plus(forcing_[j].scaled(m_(i, j)));
        const double lambda = eigvals_(i);
        std::vector<double> ca(acc.harmonics()), cb(acc.harmonics());
        for (std::size_t n = 0; n < acc.harmonics(); ++n) {
            const double omega = kTwoPi / period_ * static_cast<double>(n + 1);
            harmonic_response(lambda, omega, acc.cos_coeffs()[n], acc.sin_coeffs()[n], ca[n], cb[n]);
        }
        tilde.emplace_back(period_, acc.a0() / lambda, std::move(ca), std::move(cb));
    }
    xi_.reserve(dim_);
    for (int j = 0; j < dim_; ++j) {
        TrigPoly acc = TrigPoly::constant(0.0, period_);
        for (int i = 0; i < dim_; ++i) acc = acc.plus(tilde[i].scaled(minv_(j, i)));
        xi_.push_back(std::move(acc));
    }
}

OuModel OuModel::scalar(double alpha, double sigma, TrigPoly forcing) {
    Eigen::MatrixXd m(1, 1), s(1, 1);
    m << 1.0;
    s << sigma;
    Eigen::VectorXd ev(1);
    ev << alpha;
    const double period = forcing.period();
    return OuModel(m, ev, s, {std::move(forcing)}, period);
}

Eigen::VectorXd OuModel::xi(double t) const {
    Eigen::VectorXd v(dim_);
    for (int i = 0; i < dim_; ++i) v(i) = xi_[i].eval(t);
    return v;
}

Eigen::VectorXd OuModel::xi_derivative(double t) const {
    Eigen::VectorXd v(dim_);
    for (int i = 0; i < dim_; ++i) v(i) = xi_[i].deriv(t);
    return v;
}

Eigen::MatrixXd OuModel::exp_minus_a(double tau) const {
    Eigen::VectorXd e(dim_);
    for (int i = 0; i < dim_; ++i) e(i) = std::exp(-tau * eigvals_(i));
    return minv_ * e.asDiagonal() * m_;
}

Eigen::VectorXd OuModel::j_integral(double s, double t) const {
    if (t < s) throw ValidationError("j_integral: requires s <= t");
    return xi(t) - exp_minus_a(t - s) * xi(s);
}

GaussianMeasure OuModel::transition_kernel(double s, double t, const Eigen::VectorXd& x) const {
    if (t < s) throw ValidationError("transition_kernel: requires s <= t");
    if (x.size() != dim_) throw ValidationError("transition_kernel: state dimension mismatch");
    const double tau = t - s;
    Eigen::VectorXd mean = exp_minus_a(tau) * x + j_integral(s, t);
    Eigen::MatrixXd c(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) {
            const double rate = eigvals_(i) + eigvals_(j);
            c(i, j) = forced_cov_(i, j) / rate * (1.0 - std::exp(-tau * rate));
        }
    Eigen::MatrixXd cov = minv_ * c * minv_.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    return GaussianMeasure(std::move(mean), std::move(cov));
}

GaussianMeasure OuModel::periodic_measure(double s) const {
    Eigen::MatrixXd c(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) c(i, j) = forced_cov_(i, j) / (eigvals_(i) + eigvals_(j));
    Eigen::MatrixXd cov = minv_ * c * minv_.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    return GaussianMeasure(xi(s), std::move(cov));
}

double OuModel::geometric_tv_bound(double s, double x, int n, double delta, double gamma) const {
    if (dim_ != 1) throw ValidationError("geometric_tv_bound: 1D models only");
    if (n < 1) throw ValidationError("geometric_tv_bound: n must be >= 1");
    if (!(delta > 0.0) || delta > period_)
        throw ValidationError("geometric_tv_bound: delta must lie in (0, T]");
    if (!(gamma > 0.0)) throw ValidationError("geometric_tv_bound: gamma must be positive");
    const double alpha = eigvals_(0);
    const double sig = sigma_(0, 0);
    const double xi_s = xi(s)(0);
    const double r_s = xi_s == 0.0 ? 0.0 : xi_s * xi_s * (1.0 + gamma) / gamma;
    const double tail = sig * sig / (4.0 * alpha) / (1.0 - std::exp(-2.0 * alpha * delta));
    const double big_r = std::max(1.0 + gamma, r_s + tail);
    return std::exp(-static_cast<double>(n) * period_ * alpha) * std::sqrt(alpha / 2.0) *
           (big_r / std::abs(sig)) * (x * x + 1.0);
}

SdeModel OuModel::to_sde_model() const {
    const int d = dim_;
    struct Captured {
        std::vector<double> a; // row-major
        std::vector<TrigPoly> s;
        int d;
    };
    auto cap = std::make_shared<Captured>();
    cap->d = d;
    cap->a.resize(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cap->a[i * d + j] = a_(i, j);
    cap->s = forcing_;

    DriftFn drift = [cap](double t, std::span<const double> x, std::span<double> out) {
        const int dd = cap->d;
        for (int i = 0; i < dd; ++i) {
            double acc = cap->s[i].eval(t);
            for (int j = 0; j < dd; ++j) acc -= cap->a[i * dd + j] * x[j];
            out[i] = acc;
        }
    };
    std::vector<double> sig(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) sig[i * d + j] = sigma_(i, j);
    SdeModel m = make_constant_diffusion_model(d, period_, std::move(drift), std::move(sig),
                                               ModelKind::ou);
    if (d == 1) {
        PolyDriftSpec spec;
        spec.period = period_;
        PolyCoordSpec c;
        c.degree = 1;
        c.coeffs = {forcing_[0]};
        c.leading = -eigvals_(0);
        spec.coords.push_back(std::move(c));
        m.poly_spec = std::move(spec);
    }
    return m;
}

Eigen::VectorXd xi_by_quadrature(const OuModel& model, double t, double tol) {
    const double lam_min = model.eigvals().minCoeff();
    const double period = model.period();
    const int k = static_cast<int>(std::ceil(12.0 * std::log(10.0) / (lam_min * period))) + 1;
    const double lo = t - k * period;
    Eigen::VectorXd out(model.dim());
    for (int i = 0; i < model.dim(); ++i) {
        auto integrand = [&](double r) {
            Eigen::VectorXd s(model.dim());
            for (int j = 0; j < model.dim(); ++j) s(j) = model.forcing()[j].eval(r);
            return (model.exp_minus_a(t - r) * s)(i);
        };
        double acc = 0.0;
        for (int seg = 0; seg < k; ++seg)
            acc += integrate_adaptive(integrand, lo + seg * period, lo + (seg + 1) * period, tol / k);
        out(i) = acc;
    }
    return out;
}

} // namespace pmsde
