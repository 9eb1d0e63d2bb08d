#include "pmsde/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pmsde/errors.hpp"
#include "pmsde/rng.hpp"

namespace pmsde {

namespace {

constexpr double kNormLimitSq = 1e24; // ||x|| > 1e12 counts as exploded

bool state_ok(std::span<const double> x) {
    double norm_sq = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) return false;
        norm_sq += v * v;
    }
    return norm_sq <= kNormLimitSq;
}

/// One path, recording into the result slots. Returns the step index of the
/// first bad state, or -1 if the path stayed finite.
long advance_path(const SdeModel& model, const EnsembleRequest& req, long path,
                  std::vector<std::vector<double>>& records, std::span<double> x,
                  std::span<double> b, std::span<double> sig, std::span<double> dw) {
    const int d = model.dim;
    PathRng rng(req.seed, static_cast<std::uint64_t>(path));
    const double* start = req.x0_per_path.empty()
                              ? req.x0.data()
                              : req.x0_per_path.data() + static_cast<std::size_t>(path) * d;
    for (int i = 0; i < d; ++i) x[i] = start[i];
    const double sqrt_dt = std::sqrt(req.dt);
    const bool const_sigma = model.constant_diffusion;
    if (const_sigma)
        for (int i = 0; i < d * d; ++i) sig[i] = model.sigma_const[i];

    std::size_t rec = 0;
    const auto& steps = req.record_steps;
    long bad_at = -1;
    for (long k = 0; k <= req.n_steps; ++k) {
        if (rec < steps.size() && steps[rec] == k) {
            double* slot = records[rec].data() + static_cast<std::size_t>(path) * d;
            for (int i = 0; i < d; ++i) slot[i] = x[i];
            ++rec;
        }
        if (k == req.n_steps) break;
        const double t = req.start_time + static_cast<double>(k) * req.dt;
        model.drift(t, x, b);
        if (!const_sigma) model.diffusion(t, x, sig);
        for (int i = 0; i < d; ++i) dw[i] = sqrt_dt * rng.gaussian();
        for (int i = 0; i < d; ++i) {
            double acc = x[i] + b[i] * req.dt;
            for (int j = 0; j < d; ++j) acc += sig[i * d + j] * dw[j];
            x[i] = acc;
        }
        if (!state_ok(x)) {
            bad_at = k + 1;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t r = rec; r < steps.size(); ++r) {
                double* slot = records[r].data() + static_cast<std::size_t>(path) * d;
                for (int i = 0; i < d; ++i) slot[i] = nan;
            }
            break;
        }
    }
    return bad_at;
}

void validate_request(const SdeModel& model, const EnsembleRequest& req) {
    if (req.n_paths < 1) throw ValidationError("run_ensemble: n_paths must be >= 1");
    if (!(req.dt > 0.0)) throw ValidationError("run_ensemble: dt must be positive");
    if (req.n_steps < 0) throw ValidationError("run_ensemble: n_steps must be >= 0");
    if (req.x0_per_path.empty()) {
        if (static_cast<int>(req.x0.size()) != model.dim)
            throw ValidationError("run_ensemble: x0 dimension mismatch");
    } else if (req.x0_per_path.size() !=
               static_cast<std::size_t>(req.n_paths) * model.dim) {
        throw ValidationError("run_ensemble: x0_per_path must be n_paths x dim");
    }
    long prev = -1;
    for (long s : req.record_steps) {
        if (s < 0 || s > req.n_steps || s <= prev)
            throw ValidationError("run_ensemble: record_steps must be sorted, unique, in range");
        prev = s;
    }
}

} // namespace

bool em_step(const SdeModel& model, double t, std::span<const double> x, double dt,
             std::span<const double> dw, std::span<double> out) {
    const int d = model.dim;
    std::vector<double> b(d), sig(static_cast<std::size_t>(d) * d);
    model.drift_at(t, x, b);
    model.diffusion_at(t, x, sig);
    for (int i = 0; i < d; ++i) {
        double acc = x[i] + b[i] * dt;
        for (int j = 0; j < d; ++j) acc += sig[i * d + j] * dw[j];
        out[i] = acc;
    }
    return state_ok(out);
}

Trajectory simulate_path(const SdeModel& model, double s, std::span<const double> x0, double t_end,
                         double dt, std::uint64_t seed) {
    if (t_end < s) throw ValidationError("simulate_path: t_end must be >= s");
    if (!(dt > 0.0)) throw ValidationError("simulate_path: dt must be positive");
    if (static_cast<int>(x0.size()) != model.dim)
        throw ValidationError("simulate_path: x0 dimension mismatch");

    const int d = model.dim;
    Trajectory traj;
    traj.dim = d;
    traj.dt = dt;
    traj.seed = seed;
    traj.times.push_back(s);
    traj.states.insert(traj.states.end(), x0.begin(), x0.end());
    if (t_end == s) return traj;

    PathRng rng(seed, 0);
    std::vector<double> x(x0.begin(), x0.end()), next(d), dw(d);
    double t = s;
    long idx = 0;
    while (t < t_end) {
        const double h = std::min(dt, t_end - t);
        const double sq = std::sqrt(h);
        for (int i = 0; i < d; ++i) dw[i] = sq * rng.gaussian();
        const bool ok = em_step(model, t, x, h, dw, next);
        t = (h < dt) ? t_end : s + static_cast<double>(idx + 1) * dt;
        ++idx;
        traj.times.push_back(t);
        traj.states.insert(traj.states.end(), next.begin(), next.end());
        if (!ok) {
            traj.exploded = true;
            traj.first_bad_index = idx;
            break;
        }
        x = next;
    }
    return traj;
}

EnsembleResult run_ensemble(const SdeModel& model, const EnsembleRequest& req) {
    validate_request(model, req);
    const int d = model.dim;

    EnsembleResult res;
    res.n_paths = req.n_paths;
    res.dim = d;
    res.dt = req.dt;
    res.record_steps = req.record_steps;
    res.records.assign(req.record_steps.size(),
                       std::vector<double>(static_cast<std::size_t>(req.n_paths) * d));
    res.exploded.assign(req.n_paths, 0);

#ifdef _OPENMP
    const int workers = req.n_workers > 0 ? req.n_workers : omp_get_max_threads();
#pragma omp parallel num_threads(workers)
    {
        std::vector<double> x(d), b(d), sig(static_cast<std::size_t>(d) * d), dw(d);
#pragma omp for schedule(static)
        for (long p = 0; p < req.n_paths; ++p) {
            if (advance_path(model, req, p, res.records, x, b, sig, dw) >= 0)
                res.exploded[p] = 1;
        }
    }
#else
    std::vector<double> x(d), b(d), sig(static_cast<std::size_t>(d) * d), dw(d);
    for (long p = 0; p < req.n_paths; ++p) {
        if (advance_path(model, req, p, res.records, x, b, sig, dw) >= 0) res.exploded[p] = 1;
    }
#endif

    for (auto flag : res.exploded) res.n_exploded += flag;
    return res;
}

double snap_dt_to_period(double period, double dt) {
    if (!(dt > 0.0)) throw ValidationError("snap_dt_to_period: dt must be positive");
    const long m = std::max<long>(1, std::llround(period / dt));
    return period / static_cast<double>(m);
}

namespace {

/// Keeps only non-exploded rows, preserving path order.
std::vector<std::vector<double>> compact_records(const EnsembleResult& res) {
    const int d = res.dim;
    const long kept = res.n_paths - res.n_exploded;
    std::vector<std::vector<double>> out(res.records.size());
    for (std::size_t r = 0; r < res.records.size(); ++r) {
        out[r].resize(static_cast<std::size_t>(kept) * d);
        long row = 0;
        for (long p = 0; p < res.n_paths; ++p) {
            if (res.exploded[p]) continue;
            for (int i = 0; i < d; ++i)
                out[r][static_cast<std::size_t>(row) * d + i] =
                    res.records[r][static_cast<std::size_t>(p) * d + i];
            ++row;
        }
    }
    return out;
}

void check_explosion_budget(const EnsembleResult& res, const char* where) {
    if (res.n_exploded * 100 > res.n_paths)
        throw NumericalError(std::string(where) +
                             ": more than 1% of paths exploded; refine dt or shrink the domain");
}

} // namespace

GridChainSample sample_grid_chain(const SdeModel& model, double s, std::span<const double> x0,
                                  int n_periods, double dt, long n_paths, std::uint64_t seed,
                                  int record_every, int n_workers) {
    if (n_periods < 1) throw ValidationError("sample_grid_chain: n_periods must be >= 1");
    const double dt_snap = snap_dt_to_period(model.period, dt);
    const long steps_per_period = std::llround(model.period / dt_snap);

    std::vector<int> ns;
    if (record_every > 0)
        for (int n = record_every; n < n_periods; n += record_every) ns.push_back(n);
    ns.push_back(n_periods);

    EnsembleRequest req;
    req.start_time = s;
    req.x0.assign(x0.begin(), x0.end());
    req.dt = dt_snap;
    req.n_steps = steps_per_period * n_periods;
    for (int n : ns) req.record_steps.push_back(steps_per_period * n);
    req.n_paths = n_paths;
    req.seed = seed;
    req.n_workers = n_workers;

    EnsembleResult res = run_ensemble(model, req);
    check_explosion_budget(res, "sample_grid_chain");

    GridChainSample out;
    out.phase = s;
    out.n_periods = n_periods;
    out.dt = dt_snap;
    out.dim = model.dim;
    out.seed = seed;
    out.recorded_ns = std::move(ns);
    out.n_exploded = res.n_exploded;
    out.n_paths = res.n_paths - res.n_exploded;
    out.samples = compact_records(res);
    return out;
}

PhaseEnsemble sample_phase_ensemble(const SdeModel& model, std::span<const double> phases,
                                    int burn_in_periods, long n_paths, double dt,
                                    std::uint64_t seed, std::span<const double> x0,
                                    int n_workers) {
    if (burn_in_periods < 1)
        throw ValidationError("sample_phase_ensemble: burn_in_periods must be >= 1");
    if (phases.empty()) throw ValidationError("sample_phase_ensemble: need at least one phase");
    const double period = model.period;
    const double dt_snap = snap_dt_to_period(period, dt);
    const long m = std::llround(period / dt_snap);

    // Snap each phase (mod T) onto the step grid.
    std::vector<long> phase_steps(phases.size());
    std::vector<double> snapped(phases.size());
    for (std::size_t j = 0; j < phases.size(); ++j) {
        double ph = std::fmod(phases[j], period);
        if (ph < 0.0) ph += period;
        long st = std::llround(ph / dt_snap) % m;
        phase_steps[j] = st;
        snapped[j] = static_cast<double>(st) * dt_snap;
    }

    std::vector<long> rec_sorted;
    for (long st : phase_steps) rec_sorted.push_back(burn_in_periods * m + st);
    std::sort(rec_sorted.begin(), rec_sorted.end());
    rec_sorted.erase(std::unique(rec_sorted.begin(), rec_sorted.end()), rec_sorted.end());

    EnsembleRequest req;
    req.start_time = 0.0;
    req.x0 = x0.empty() ? std::vector<double>(model.dim, 0.0)
                        : std::vector<double>(x0.begin(), x0.end());
    req.dt = dt_snap;
    req.n_steps = rec_sorted.back();
    req.record_steps = rec_sorted;
    req.n_paths = n_paths;
    req.seed = seed;
    req.n_workers = n_workers;

    EnsembleResult res = run_ensemble(model, req);
    check_explosion_budget(res, "sample_phase_ensemble");
    auto compact = compact_records(res);

    PhaseEnsemble out;
    out.phases = snapped;
    out.dt = dt_snap;
    out.burn_in_periods = burn_in_periods;
    out.dim = model.dim;
    out.seed = seed;
    out.n_exploded = res.n_exploded;
    out.n_paths = res.n_paths - res.n_exploded;
    out.samples.resize(phases.size());
    for (std::size_t j = 0; j < phases.size(); ++j) {
        const long want = burn_in_periods * m + phase_steps[j];
        const auto it = std::lower_bound(rec_sorted.begin(), rec_sorted.end(), want);
        out.samples[j] = compact[static_cast<std::size_t>(it - rec_sorted.begin())];
    }
    return out;
}

void block_mean_var(const std::vector<double>& block, long n_rows, int dim,
                    std::span<double> mean, std::span<double> var) {
    for (int i = 0; i < dim; ++i) {
        double m = 0.0;
        for (long r = 0; r < n_rows; ++r) m += block[static_cast<std::size_t>(r) * dim + i];
        m /= static_cast<double>(n_rows);
        double v = 0.0;
        for (long r = 0; r < n_rows; ++r) {
            const double z = block[static_cast<std::size_t>(r) * dim + i] - m;
            v += z * z;
        }
        mean[i] = m;
        var[i] = n_rows > 1 ? v / static_cast<double>(n_rows - 1) : 0.0;
    }
}

} // namespace pmsde
