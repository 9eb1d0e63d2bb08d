#include "pmsde/fokker_planck.hpp"

#include <algorithm>
#include <cmath>

#include "pmsde/errors.hpp"

namespace pmsde {

namespace {

constexpr double kEllipticityFloor = 1e-12;

/// Tridiagonal coefficients of L* on the grid: (L*q)_i = a_i q_{i-1} +
/// c_i q_i + e_i q_{i+1}, zero-flux at both walls. Columns sum to zero, so
/// any time discretization built from it conserves mass exactly.
struct Tridiag {
    std::vector<double> a, c, e;
};

void check_model_1d(const SdeModel& model) {
    if (model.dim != 1) throw ValidationError("fokker_planck: 1D models only");
}

Tridiag assemble_operator(const SdeModel& model, double t, const FpGrid& grid) {
    const int n = grid.nx;
    const double dx = grid.dx();
    Tridiag op;
    op.a.assign(n, 0.0);
    op.c.assign(n, 0.0);
    op.e.assign(n, 0.0);

    // Diffusion D_i = sigma^2/2 at cell centers, drift at interfaces.
    std::vector<double> diff(n);
    std::vector<double> sig(1);
    std::vector<double> xbuf(1);
    for (int i = 0; i < n; ++i) {
        xbuf[0] = grid.cell_center(i);
        model.diffusion_at(t, xbuf, sig);
        const double d = 0.5 * sig[0] * sig[0];
        if (!(d >= kEllipticityFloor))
            throw ValidationError("fokker_planck: ellipticity violated on the grid");
        diff[i] = d;
    }
    std::vector<double> bface(n - 1);
    std::vector<double> bout(1);
    for (int i = 0; i + 1 < n; ++i) {
        xbuf[0] = grid.x_lo + (i + 1) * dx;
        model.drift_at(t, xbuf, bout);
        bface[i] = bout[0];
    }

    for (int i = 0; i < n; ++i) {
        if (i > 0) { // flux through the left face i-1/2
            op.a[i] += (0.5 * bface[i - 1] + diff[i - 1] / dx) / dx;
            op.c[i] += (0.5 * bface[i - 1] - diff[i] / dx) / dx;
        }
        if (i + 1 < n) { // flux through the right face i+1/2
            op.c[i] += (-0.5 * bface[i] - diff[i] / dx) / dx;
            op.e[i] += (-0.5 * bface[i] + diff[i + 1] / dx) / dx;
        }
    }
    return op;
}

/// Thomas solve of (I - w A) x = rhs for tridiagonal A.
void solve_shifted(const Tridiag& op, double w, std::span<const double> rhs,
                   std::vector<double>& x, std::vector<double>& cp, std::vector<double>& dp) {
    const int n = static_cast<int>(rhs.size());
    cp.resize(n);
    dp.resize(n);
    double diag = 1.0 - w * op.c[0];
    cp[0] = -w * op.e[0] / diag;
    dp[0] = rhs[0] / diag;
    for (int i = 1; i < n; ++i) {
        const double lower = -w * op.a[i];
        diag = 1.0 - w * op.c[i] - lower * cp[i - 1];
        cp[i] = -w * op.e[i] / diag;
        dp[i] = (rhs[i] - lower * dp[i - 1]) / diag;
    }
    x.resize(n);
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
}

double mass_of(std::span<const double> q, double dx) {
    double acc = 0.0;
    for (double v : q) acc += v;
    return acc * dx;
}

} // namespace

void FpGrid::validate() const {
    if (nx < 16) throw ValidationError("FpGrid: nx must be >= 16");
    if (nt < 16) throw ValidationError("FpGrid: nt must be >= 16");
    if (!(x_hi > x_lo)) throw ValidationError("FpGrid: need x_hi > x_lo");
}

std::vector<double> fp_operator_apply(const SdeModel& model, double t, std::span<const double> q,
                                      const FpGrid& grid) {
    check_model_1d(model);
    grid.validate();
    if (static_cast<int>(q.size()) != grid.nx)
        throw ValidationError("fp_operator_apply: density size mismatch");
    const Tridiag op = assemble_operator(model, t, grid);
    const int n = grid.nx;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double acc = op.c[i] * q[i];
        if (i > 0) acc += op.a[i] * q[i - 1];
        if (i + 1 < n) acc += op.e[i] * q[i + 1];
        out[i] = acc;
    }
    return out;
}

std::vector<double> evolve_one_period(const SdeModel& model, std::span<const double> q0,
                                      const FpGrid& grid, EvolveStats* stats) {
    check_model_1d(model);
    grid.validate();
    if (static_cast<int>(q0.size()) != grid.nx)
        throw ValidationError("evolve_one_period: density size mismatch");
    for (double v : q0)
        if (v < -1e-12) throw ValidationError("evolve_one_period: negative input density");

    const int n = grid.nx;
    const double dt = model.period / grid.nt;
    const double dx = grid.dx();

    std::vector<double> q(q0.begin(), q0.end());
    std::vector<double> rhs(n), cp, dp, next;
    const double mass0 = mass_of(q, dx);
    const double max0 = *std::max_element(q.begin(), q.end());

    Tridiag op_old = assemble_operator(model, 0.0, grid);
    for (int k = 0; k < grid.nt; ++k) {
        const double t1 = (k + 1) * dt;
        const Tridiag op_new = assemble_operator(model, t1, grid);
        for (int i = 0; i < n; ++i) {
            double acc = q[i] + 0.5 * dt * op_old.c[i] * q[i];
            if (i > 0) acc += 0.5 * dt * op_old.a[i] * q[i - 1];
            if (i + 1 < n) acc += 0.5 * dt * op_old.e[i] * q[i + 1];
            rhs[i] = acc;
        }
        solve_shifted(op_new, 0.5 * dt, rhs, next, cp, dp);
        q.swap(next);
        op_old = op_new;

        const double peak = *std::max_element(q.begin(), q.end());
        if (!std::isfinite(peak) || peak > 1e6 * std::max(max0, 1.0))
            throw NumericalError("evolve_one_period: instability detected; refine the grid");
    }

    const double mass1 = mass_of(q, dx);
    if (std::abs(mass1 - mass0) > 1e-6)
        throw NumericalError("evolve_one_period: mass drift exceeds 1e-6; refine the grid");

    long clips = 0;
    for (double& v : q) {
        if (v < 0.0) {
            if (v < -1e-12) ++clips;
            v = 0.0;
        }
    }
    const double mass2 = mass_of(q, dx);
    if (mass2 > 0.0) {
        const double scale = mass1 / mass2;
        for (double& v : q) v *= scale;
    }
    if (stats) {
        stats->mass_drift = std::abs(mass1 - mass0);
        stats->clip_events = clips;
    }
    return q;
}

PeriodicDensity solve_periodic(const SdeModel& model, const FpGrid& grid,
                               std::span<const double> init, int max_iters, double tol) {
    check_model_1d(model);
    grid.validate();
    const int n = grid.nx;
    const double dx = grid.dx();

    std::vector<double> q(n);
    if (init.empty()) {
        const double mid = 0.5 * (grid.x_lo + grid.x_hi);
        const double sd = (grid.x_hi - grid.x_lo) / 8.0;
        for (int i = 0; i < n; ++i) {
            const double z = (grid.cell_center(i) - mid) / sd;
            q[i] = std::exp(-0.5 * z * z);
        }
    } else {
        if (static_cast<int>(init.size()) != n)
            throw ValidationError("solve_periodic: init size mismatch");
        q.assign(init.begin(), init.end());
    }
    double mass = mass_of(q, dx);
    if (!(mass > 0.0)) throw ValidationError("solve_periodic: init has no mass");
    for (double& v : q) v /= mass;

    PeriodicDensity pd;
    pd.grid = grid;
    pd.period = model.period;
    pd.converged = false;

    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;
    long clip_total = 0;
    EvolveStats stats;
    for (; iter < max_iters; ++iter) {
        std::vector<double> next = evolve_one_period(model, q, grid, &stats);
        clip_total += stats.clip_events;
        residual = 0.0;
        for (int i = 0; i < n; ++i) residual += std::abs(next[i] - q[i]) * dx;
        q.swap(next);
        if (residual < tol) {
            pd.converged = true;
            ++iter;
            break;
        }
    }
    pd.iterations = iter;

    // Final pass storing every slice.
    pd.values.assign(static_cast<std::size_t>(grid.nt + 1) * n, 0.0);
    std::copy(q.begin(), q.end(), pd.values.begin());
    const double dt = model.period / grid.nt;
    std::vector<double> rhs(n), cp, dp, next;
    Tridiag op_old = assemble_operator(model, 0.0, grid);
    std::vector<double> cur = q;
    for (int k = 0; k < grid.nt; ++k) {
        const Tridiag op_new = assemble_operator(model, (k + 1) * dt, grid);
        for (int i = 0; i < n; ++i) {
            double acc = cur[i] + 0.5 * dt * op_old.c[i] * cur[i];
            if (i > 0) acc += 0.5 * dt * op_old.a[i] * cur[i - 1];
            if (i + 1 < n) acc += 0.5 * dt * op_old.e[i] * cur[i + 1];
            rhs[i] = acc;
        }
        solve_shifted(op_new, 0.5 * dt, rhs, next, cp, dp);
        cur.swap(next);
        op_old = op_new;
        std::copy(cur.begin(), cur.end(),
                  pd.values.begin() + static_cast<std::size_t>(k + 1) * n);
    }

    double gap = 0.0;
    for (int i = 0; i < n; ++i) gap += std::abs(pd.values[i] - cur[i]) * dx;
    pd.residual = gap;
    pd.clip_events = clip_total;
    pd.boundary_mass = (cur[0] + cur[n - 1]) * dx;
    return pd;
}

std::vector<EmpiricalMeasure> density_to_measures(const PeriodicDensity& pd,
                                                  std::span<const double> phases) {
    const int n = pd.grid.nx;
    const double dt = pd.period / pd.grid.nt;
    std::vector<EmpiricalMeasure> out;
    out.reserve(phases.size());
    for (double phase : phases) {
        if (phase < 0.0 || phase >= pd.period)
            throw ValidationError("density_to_measures: phases must lie in [0, T)");
        const double pos = phase / dt;
        const int k0 = std::min(static_cast<int>(pos), pd.grid.nt - 1);
        const double frac = pos - k0;
        EmpiricalMeasure m;
        m.grid.lo = {pd.grid.x_lo};
        m.grid.hi = {pd.grid.x_hi};
        m.grid.bins = {n};
        m.n_samples = 0;
        m.out_of_box = 0.0;
        m.masses.resize(n);
        const auto s0 = pd.slice(k0);
        const auto s1 = pd.slice(k0 + 1);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = std::max(0.0, (1.0 - frac) * s0[i] + frac * s1[i]);
            m.masses[i] = v;
            total += v;
        }
        if (!(total > 0.0)) throw NumericalError("density_to_measures: empty density slice");
        for (double& v : m.masses) v /= total;
        out.push_back(std::move(m));
    }
    return out;
}

EmpiricalMeasure coarsen_measure(const EmpiricalMeasure& m, int factor) {
    if (m.grid.dim() != 1) throw ValidationError("coarsen_measure: 1D only");
    if (factor < 1 || m.grid.bins[0] % factor != 0)
        throw ValidationError("coarsen_measure: factor must divide the bin count");
    EmpiricalMeasure out;
    out.grid.lo = m.grid.lo;
    out.grid.hi = m.grid.hi;
    out.grid.bins = {m.grid.bins[0] / factor};
    out.n_samples = m.n_samples;
    out.out_of_box = m.out_of_box;
    out.masses.assign(out.grid.bins[0], 0.0);
    for (int i = 0; i < m.grid.bins[0]; ++i) out.masses[i / factor] += m.masses[i];
    return out;
}

} // namespace pmsde
