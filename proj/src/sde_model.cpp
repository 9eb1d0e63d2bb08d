#include "pmsde/sde_model.hpp"

#include <cmath>
#include <memory>
#include <utility>

#include "pmsde/errors.hpp"
#include "pmsde/rng.hpp"

namespace pmsde {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> matmul_self_transpose(const std::vector<double>& a, int d) {
    std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += a[i * d + k] * a[j * d + k];
            out[i * d + j] = acc;
        }
    return out;
}
} // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::generic: return "generic";
        case ModelKind::ou: return "ou";
        case ModelKind::polynomial: return "polynomial";
        case ModelKind::gradient: return "gradient";
        case ModelKind::langevin: return "langevin";
    }
    return "unknown";
}

double PolyCoordSpec::drift_eval(double t, double u) const {
    // Horner on S_0 + u S_1 + ... + u^{2p-1} S_{2p-1}.
    double acc = leading;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + it->eval(t);
    return acc;
}

void PolyDriftSpec::validate() const {
    if (!(period > 0.0)) throw ValidationError("PolyDriftSpec: period must be positive");
    if (coords.empty()) throw ValidationError("PolyDriftSpec: no coordinates");
    for (const auto& c : coords) {
        if (c.degree < 1) throw ValidationError("PolyDriftSpec: degree must be >= 1");
        const std::size_t expect = static_cast<std::size_t>(2 * c.degree - 1);
        if (c.coeffs.size() != expect)
            throw ValidationError("PolyDriftSpec: need exactly 2p-1 coefficient functions "
                                  "plus the constant leading term");
        if (!std::isfinite(c.leading))
            throw ValidationError("PolyDriftSpec: leading constant must be finite");
    }
}

double PotentialSpec::value_at(double t, std::span<const double> x) const {
    if (!value) throw ValidationError("PotentialSpec: value callable missing");
    return value(t, x);
}

void PotentialSpec::gradient_at(double t, std::span<const double> x, std::span<double> out) const {
    if (gradient) {
        gradient(t, x, out);
        return;
    }
    std::vector<double> xp(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = std::max(1e-5, 1e-5 * std::abs(x[i]));
        const double xi = xp[i];
        xp[i] = xi + h;
        const double fp = value_at(t, xp);
        xp[i] = xi - h;
        const double fm = value_at(t, xp);
        xp[i] = xi;
        out[i] = (fp - fm) / (2.0 * h);
    }
}

double PotentialSpec::time_derivative_at(double t, std::span<const double> x) const {
    if (time_derivative) return time_derivative(t, x);
    const double h = std::max(1e-5, 1e-5 * std::abs(t));
    return (value_at(t + h, x) - value_at(t - h, x)) / (2.0 * h);
}

void PotentialSpec::hessian_at(double t, std::span<const double> x, std::span<double> out) const {
    const std::size_t d = x.size();
    if (hessian) {
        hessian(t, x, out);
        return;
    }
    std::vector<double> xp(x.begin(), x.end());
    const double f0 = value_at(t, xp);
    for (std::size_t i = 0; i < d; ++i) {
        const double hi = std::max(1e-5, 1e-5 * std::abs(x[i]));
        for (std::size_t j = i; j < d; ++j) {
            double v;
            if (i == j) {
                const double xi = xp[i];
                xp[i] = xi + hi;
                const double fp = value_at(t, xp);
                xp[i] = xi - hi;
                const double fm = value_at(t, xp);
                xp[i] = xi;
                v = (fp - 2.0 * f0 + fm) / (hi * hi);
            } else {
                const double hj = std::max(1e-5, 1e-5 * std::abs(x[j]));
                const double xi = xp[i], xj = xp[j];
                xp[i] = xi + hi; xp[j] = xj + hj;
                const double fpp = value_at(t, xp);
                xp[j] = xj - hj;
                const double fpm = value_at(t, xp);
                xp[i] = xi - hi; xp[j] = xj + hj;
                const double fmp = value_at(t, xp);
                xp[j] = xj - hj;
                const double fmm = value_at(t, xp);
                xp[i] = xi; xp[j] = xj;
                v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            }
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
}

void SdeModel::drift_at(double t, std::span<const double> x, std::span<double> out) const {
    drift(t, x, out);
}

void SdeModel::diffusion_at(double t, std::span<const double> x, std::span<double> out) const {
    if (constant_diffusion) {
        for (std::size_t i = 0; i < sigma_const.size(); ++i) out[i] = sigma_const[i];
        return;
    }
    diffusion(t, x, out);
}

std::vector<double> SdeModel::diffusion_squared(double t, std::span<const double> x) const {
    std::vector<double> sigma(static_cast<std::size_t>(dim) * dim);
    diffusion_at(t, x, sigma);
    return matmul_self_transpose(sigma, dim);
}

SdeModel make_generic_model(int dim, double period, DriftFn drift, DiffusionFn diffusion) {
    if (dim < 1) throw ValidationError("SdeModel: dim must be positive");
    if (!(period > 0.0)) throw ValidationError("SdeModel: period must be positive");
    SdeModel m;
    m.dim = dim;
    m.period = period;
    m.kind = ModelKind::generic;
    m.drift = std::move(drift);
    m.diffusion = std::move(diffusion);
    return m;
}

SdeModel make_constant_diffusion_model(int dim, double period, DriftFn drift,
                                       std::vector<double> sigma_row_major, ModelKind kind) {
    if (dim < 1) throw ValidationError("SdeModel: dim must be positive");
    if (!(period > 0.0)) throw ValidationError("SdeModel: period must be positive");
    if (sigma_row_major.size() != static_cast<std::size_t>(dim) * dim)
        throw ValidationError("SdeModel: sigma must be dim x dim");
    SdeModel m;
    m.dim = dim;
    m.period = period;
    m.kind = kind;
    m.drift = std::move(drift);
    m.constant_diffusion = true;
    m.sigma_const = std::move(sigma_row_major);
    return m;
}

SdeModel build_duffing(double amplitude, double omega, double sigma) {
    if (sigma == 0.0) throw ValidationError("build_duffing: sigma must be nonzero");
    const double period = omega == 0.0 ? 1.0 : kTwoPi / std::abs(omega);
    PolyDriftSpec spec;
    spec.period = period;
    PolyCoordSpec c;
    c.degree = 2;
    // A cos(omega t) expressed against the phase-offset harmonics.
    c.coeffs = {omega == 0.0 ? TrigPoly::constant(amplitude, period)
                             : TrigPoly::from_standard(period, 0.0, {amplitude}, {}),
                TrigPoly::constant(1.0, period), TrigPoly::constant(0.0, period)};
    c.leading = -1.0;
    spec.coords.push_back(std::move(c));
    return build_poly_drift_model(std::move(spec), {sigma});
}

SdeModel build_poly_drift_model(PolyDriftSpec spec, std::vector<double> sigma_row_major) {
    spec.validate();
    const int d = spec.dim();
    if (sigma_row_major.size() != static_cast<std::size_t>(d) * d)
        throw ValidationError("build_poly_drift_model: diffusion dimension mismatch");
    auto shared = std::make_shared<PolyDriftSpec>(spec);
    DriftFn drift = [shared](double t, std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < shared->coords.size(); ++i)
            out[i] = shared->coords[i].drift_eval(t, x[i]);
    };
    SdeModel m = make_constant_diffusion_model(d, spec.period, std::move(drift),
                                               std::move(sigma_row_major), ModelKind::polynomial);
    m.poly_spec = std::move(spec);
    return m;
}

SdeModel build_poly_drift_model(PolyDriftSpec spec, DiffusionFn diffusion, bool constant_diffusion,
                                std::vector<double> sigma_row_major) {
    if (constant_diffusion) return build_poly_drift_model(std::move(spec), std::move(sigma_row_major));
    spec.validate();
    const int d = spec.dim();
    auto shared = std::make_shared<PolyDriftSpec>(spec);
    DriftFn drift = [shared](double t, std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < shared->coords.size(); ++i)
            out[i] = shared->coords[i].drift_eval(t, x[i]);
    };
    SdeModel m = make_generic_model(d, spec.period, std::move(drift), std::move(diffusion));
    m.kind = ModelKind::polynomial;
    m.poly_spec = std::move(spec);
    return m;
}

SdeModel build_gradient_model(PotentialSpec pot, int dim, double period,
                              std::vector<double> sigma_row_major) {
    if (!pot.value && !pot.gradient)
        throw ValidationError("build_gradient_model: potential needs value or gradient");
    auto shared = std::make_shared<PotentialSpec>(std::move(pot));
    DriftFn drift = [shared](double t, std::span<const double> x, std::span<double> out) {
        shared->gradient_at(t, x, out);
        for (auto& v : out) v = -v;
    };
    SdeModel m = make_constant_diffusion_model(dim, period, std::move(drift),
                                               std::move(sigma_row_major), ModelKind::gradient);
    return m;
}

SdeModel build_langevin_model(
    std::function<void(double, std::span<const double>, std::span<double>)> force, int force_dim,
    double period, double gamma, std::vector<double> sigma_row_major) {
    const int d = force_dim;
    if (d < 1) throw ValidationError("build_langevin_model: force dimension must be positive");
    if (gamma < 0.0) throw ValidationError("build_langevin_model: gamma must be nonnegative");
    if (sigma_row_major.size() != static_cast<std::size_t>(d) * d)
        throw ValidationError("build_langevin_model: sigma must be d x d");

    // Numerical invertibility check via full-pivot Gaussian elimination.
    {
        std::vector<double> a = sigma_row_major;
        double max_piv = 0.0, min_piv = 0.0;
        std::vector<int> cols(d);
        for (int i = 0; i < d; ++i) cols[i] = i;
        bool singular = false;
        for (int k = 0; k < d && !singular; ++k) {
            int pr = k, pc = k;
            double best = 0.0;
            for (int i = k; i < d; ++i)
                for (int j = k; j < d; ++j)
                    if (std::abs(a[i * d + j]) > best) { best = std::abs(a[i * d + j]); pr = i; pc = j; }
            if (best == 0.0) { singular = true; break; }
            for (int j = 0; j < d; ++j) std::swap(a[k * d + j], a[pr * d + j]);
            for (int i = 0; i < d; ++i) std::swap(a[i * d + k], a[i * d + pc]);
            if (k == 0) { max_piv = best; min_piv = best; }
            max_piv = std::max(max_piv, best);
            min_piv = std::min(min_piv, best);
            for (int i = k + 1; i < d; ++i) {
                const double f = a[i * d + k] / a[k * d + k];
                for (int j = k; j < d; ++j) a[i * d + j] -= f * a[k * d + j];
            }
        }
        if (singular || max_piv / min_piv > 1e12)
            throw ValidationError("build_langevin_model: sigma is singular or near-singular");
    }

    const int dim = 2 * d;
    std::vector<double> big_sigma(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            big_sigma[(d + i) * dim + (d + j)] = sigma_row_major[i * d + j];

    auto shared = std::make_shared<decltype(force)>(std::move(force));
    const double g = gamma;
    DriftFn drift = [shared, d, g](double t, std::span<const double> x, std::span<double> out) {
        // x = (q, p)
        for (int i = 0; i < d; ++i) out[i] = x[d + i];
        (*shared)(t, x.subspan(0, d), out.subspan(d, d));
        for (int i = 0; i < d; ++i) out[d + i] -= g * x[d + i];
    };
    SdeModel m = make_constant_diffusion_model(dim, period, std::move(drift),
                                               std::move(big_sigma), ModelKind::langevin);
    return m;
}

bool coefficients_periodic(const SdeModel& model, double tol, int n_samples, std::uint64_t seed) {
    PathRng rng(seed, 7);
    const int d = model.dim;
    std::vector<double> x(d), b0(d), b1(d);
    std::vector<double> s0(static_cast<std::size_t>(d) * d), s1(s0.size());
    for (int k = 0; k < n_samples; ++k) {
        const double t = rng.uniform01() * model.period * 3.0;
        for (auto& v : x) v = 4.0 * (rng.uniform01() - 0.5);
        model.drift_at(t, x, b0);
        model.drift_at(t + model.period, x, b1);
        for (int i = 0; i < d; ++i)
            if (std::abs(b0[i] - b1[i]) > tol * std::max(1.0, std::abs(b0[i]))) return false;
        model.diffusion_at(t, x, s0);
        model.diffusion_at(t + model.period, x, s1);
        for (std::size_t i = 0; i < s0.size(); ++i)
            if (std::abs(s0[i] - s1[i]) > tol * std::max(1.0, std::abs(s0[i]))) return false;
    }
    return true;
}

} // namespace pmsde
