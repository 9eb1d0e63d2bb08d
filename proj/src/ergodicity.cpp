#include "pmsde/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pmsde/errors.hpp"
#include "pmsde/rng.hpp"

namespace pmsde {

namespace {

constexpr int kBootstrapReplicates = 24;

struct FitResult {
    double r = 0.0, big_r = 0.0, residual = 0.0;
    int n_points = 0;
};

FitResult fit_geometric(const std::vector<int>& ns, const std::vector<double>& tv,
                        const std::vector<bool>& use) {
    FitResult fit;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!use[i]) continue;
        const double x = static_cast<double>(ns[i]);
        const double y = std::log(tv[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++m;
    }
    fit.n_points = m;
    if (m < 2) return fit;
    const double denom = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    fit.r = std::exp(slope);
    fit.big_r = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!use[i]) continue;
        const double pred = intercept + slope * ns[i];
        const double res = std::log(tv[i]) - pred;
        rss += res * res;
    }
    fit.residual = std::sqrt(rss / m);
    return fit;
}

/// Bootstrap spread of TV(hist, target) when resampling the observed hist.
double tv_point_error(const EmpiricalMeasure& observed, const EmpiricalMeasure& target,
                      std::uint64_t seed) {
    const auto fl = tv_noise_floor_two_sample(observed, observed.n_samples, observed.n_samples,
                                              kBootstrapReplicates / 2, seed);
    (void)target;
    return fl.sd + 0.5 * fl.mean; // conservative spread proxy
}

ConvergenceCurve curve_from_samples(const SdeModel& model, double s, std::span<const double> x0,
                                    std::span<const int> ns, double dt, long n_paths,
                                    std::uint64_t seed, const GridSpec& grid,
                                    const EmpiricalMeasure& target_binned, int n_workers) {
    if (ns.empty()) throw ValidationError("convergence_curve: need at least one n");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] <= ns[i - 1]) throw ValidationError("convergence_curve: ns must increase");
    if (ns.front() < 1) throw ValidationError("convergence_curve: ns must be >= 1");

    const double dt_snap = snap_dt_to_period(model.period, dt);
    const long m = std::llround(model.period / dt_snap);

    EnsembleRequest req;
    req.start_time = s;
    req.x0.assign(x0.begin(), x0.end());
    req.dt = dt_snap;
    req.n_steps = m * ns.back();
    for (int n : ns) req.record_steps.push_back(m * n);
    req.n_paths = n_paths;
    req.seed = seed;
    req.n_workers = n_workers;
    EnsembleResult res = run_ensemble(model, req);
    if (res.n_exploded * 100 > res.n_paths)
        throw NumericalError("convergence_curve: more than 1% of paths exploded");

    const long kept = res.n_paths - res.n_exploded;
    const int d = model.dim;

    ConvergenceCurve curve;
    curve.ns.assign(ns.begin(), ns.end());
    const auto floor = tv_noise_floor_vs_target(target_binned, kept, kBootstrapReplicates,
                                                seed ^ 0xB007ull);
    curve.noise_floor = floor.mean;

    std::vector<double> row_buf;
    for (std::size_t r = 0; r < res.records.size(); ++r) {
        row_buf.clear();
        for (long p = 0; p < res.n_paths; ++p) {
            if (res.exploded[p]) continue;
            for (int i = 0; i < d; ++i)
                row_buf.push_back(res.records[r][static_cast<std::size_t>(p) * d + i]);
        }
        const auto hist = empirical_measure(row_buf, kept, grid);
        curve.tv_values.push_back(tv_distance(hist, target_binned));
        curve.mc_errors.push_back(tv_point_error(hist, target_binned, seed ^ (0xE44 + r)));
    }

    std::vector<bool> use(curve.ns.size());
    bool any = false;
    for (std::size_t i = 0; i < use.size(); ++i) {
        use[i] = curve.tv_values[i] > 3.0 * curve.noise_floor;
        any = any || use[i];
    }
    const FitResult fit = fit_geometric(curve.ns, curve.tv_values, use);
    curve.fitted_R = fit.big_r;
    curve.fitted_r = fit.r;
    curve.fit_residual = fit.residual;
    curve.n_fit_points = fit.n_points;
    if (!any || fit.n_points < 2)
        curve.verdict = "inconclusive-converged";
    else if (fit.r > 0.0 && fit.r < 1.0 && fit.residual <= 0.25)
        curve.verdict = "geometric";
    else
        curve.verdict = "not-geometric";
    return curve;
}

} // namespace

ConvergenceCurve convergence_curve(const SdeModel& model, double s, std::span<const double> x0,
                                   std::span<const int> ns, double dt, long n_paths,
                                   std::uint64_t seed, const GaussianMeasure& target,
                                   int n_workers) {
    const GridSpec grid = default_grid_for(target, n_paths);
    const EmpiricalMeasure binned = bin_gaussian(target, grid);
    return curve_from_samples(model, s, x0, ns, dt, n_paths, seed, grid, binned, n_workers);
}

ConvergenceCurve convergence_curve(const SdeModel& model, double s, std::span<const double> x0,
                                   std::span<const int> ns, double dt, long n_paths,
                                   std::uint64_t seed, const EmpiricalMeasure& target,
                                   int n_workers) {
    return curve_from_samples(model, s, x0, ns, dt, n_paths, seed, target.grid, target, n_workers);
}

namespace {

GridSpec grid_from_moments(std::span<const double> mean, std::span<const double> var,
                           long n_samples) {
    const int d = static_cast<int>(mean.size());
    GaussianMeasure g(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
    for (int i = 0; i < d; ++i) {
        g.mean(i) = mean[i];
        g.cov(i, i) = std::max(var[i], 1e-12);
    }
    return default_grid_for(g, n_samples);
}

std::vector<double> half_rows(const std::vector<double>& block, int d, long begin, long end) {
    return std::vector<double>(block.begin() + static_cast<std::size_t>(begin) * d,
                               block.begin() + static_cast<std::size_t>(end) * d);
}

} // namespace

PeriodicityReport check_periodicity(const SdeModel& model, std::span<const double> phases,
                                    int burn_in_periods, long n_paths, double dt,
                                    std::uint64_t seed, std::span<const double> x0,
                                    int n_workers) {
    if (phases.size() < 2) throw ValidationError("check_periodicity: need at least two phases");
    if (burn_in_periods < 1) throw ValidationError("check_periodicity: burn_in_periods >= 1");
    const int d = model.dim;
    const double period = model.period;
    const double dt_snap = snap_dt_to_period(period, dt);
    const long m = std::llround(period / dt_snap);

    std::vector<long> phase_steps(phases.size());
    std::vector<double> snapped(phases.size());
    for (std::size_t j = 0; j < phases.size(); ++j) {
        double ph = std::fmod(phases[j], period);
        if (ph < 0.0) ph += period;
        phase_steps[j] = std::llround(ph / dt_snap) % m;
        snapped[j] = static_cast<double>(phase_steps[j]) * dt_snap;
    }

    // Record at burn + s_j and burn + T + s_j for every phase.
    std::vector<long> rec;
    for (long st : phase_steps) {
        rec.push_back(burn_in_periods * m + st);
        rec.push_back((burn_in_periods + 1) * m + st);
    }
    std::sort(rec.begin(), rec.end());
    rec.erase(std::unique(rec.begin(), rec.end()), rec.end());

    EnsembleRequest req;
    req.start_time = 0.0;
    req.x0 = x0.empty() ? std::vector<double>(d, 0.0) : std::vector<double>(x0.begin(), x0.end());
    req.dt = dt_snap;
    req.n_steps = rec.back();
    req.record_steps = rec;
    req.n_paths = n_paths;
    req.seed = seed;
    req.n_workers = n_workers;
    EnsembleResult res = run_ensemble(model, req);
    if (res.n_exploded * 100 > res.n_paths)
        throw NumericalError("check_periodicity: more than 1% of paths exploded");

    auto record_index = [&](long step) {
        return static_cast<std::size_t>(
            std::lower_bound(rec.begin(), rec.end(), step) - rec.begin());
    };
    const long kept_all = res.n_paths - res.n_exploded;
    auto compact = [&](std::size_t r) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(kept_all) * d);
        for (long p = 0; p < res.n_paths; ++p) {
            if (res.exploded[p]) continue;
            for (int i = 0; i < d; ++i)
                out.push_back(res.records[r][static_cast<std::size_t>(p) * d + i]);
        }
        return out;
    };

    PeriodicityReport report;
    std::vector<std::vector<double>> means(phases.size()), ses(phases.size());
    std::vector<std::vector<double>> at_phase(phases.size());

    for (std::size_t j = 0; j < phases.size(); ++j) {
        const auto block_s = compact(record_index(burn_in_periods * m + phase_steps[j]));
        const auto block_sT = compact(record_index((burn_in_periods + 1) * m + phase_steps[j]));
        at_phase[j] = block_s;

        PhasePeriodicityEntry entry;
        entry.phase = snapped[j];
        entry.mean.resize(d);
        entry.std_error.resize(d);
        std::vector<double> var(d);
        block_mean_var(block_s, kept_all, d, entry.mean, var);
        for (int i = 0; i < d; ++i)
            entry.std_error[i] = std::sqrt(var[i] / static_cast<double>(kept_all));
        means[j] = entry.mean;
        ses[j] = entry.std_error;

        // Independent halves: rho_hat(s) from the first half of the paths,
        // rho_hat(s+T) from the second half.
        const long half = kept_all / 2;
        auto a = half_rows(block_s, d, 0, half);
        auto b = half_rows(block_sT, d, half, kept_all);
        std::vector<double> pooled = a;
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::vector<double> pm(d), pv(d);
        block_mean_var(pooled, kept_all - half + half, d, pm, pv);
        const GridSpec grid = grid_from_moments(pm, pv, half);
        const auto hist_a = empirical_measure(a, half, grid);
        const auto hist_b = empirical_measure(b, kept_all - half, grid);
        const auto pooled_hist = empirical_measure(pooled, kept_all, grid);
        const auto floor = tv_noise_floor_two_sample(pooled_hist, half, kept_all - half,
                                                     kBootstrapReplicates, seed ^ (0x9A11 + j));
        entry.tv_phase_vs_next_period = tv_distance(hist_a, hist_b);
        entry.tv_threshold = floor.mean + 4.0 * floor.sd;
        entry.periodic_ok = entry.tv_phase_vs_next_period <= entry.tv_threshold;
        report.phases.push_back(std::move(entry));
    }

    // Phase dependence: any coordinate of any phase pair separated by more
    // than 4 combined standard errors.
    double max_gap = 0.0, gap_threshold = 0.0;
    bool significant = false;
    for (std::size_t j = 0; j < phases.size(); ++j)
        for (std::size_t k = j + 1; k < phases.size(); ++k)
            for (int i = 0; i < d; ++i) {
                const double gap = std::abs(means[j][i] - means[k][i]);
                const double thr =
                    4.0 * std::sqrt(ses[j][i] * ses[j][i] + ses[k][i] * ses[k][i]);
                if (gap > max_gap) {
                    max_gap = gap;
                    gap_threshold = thr;
                }
                if (gap > thr) significant = true;
            }
    report.max_mean_difference = max_gap;
    report.mean_difference_threshold = gap_threshold;
    report.phase_dependence_significant = significant;

    // Push-forward consistency: evolve half A from phase j to phase j+1 and
    // compare with half B recorded there.
    for (std::size_t j = 0; j + 1 < phases.size(); ++j) {
        const long gap_steps = phase_steps[j + 1] > phase_steps[j]
                                   ? phase_steps[j + 1] - phase_steps[j]
                                   : m - (phase_steps[j] - phase_steps[j + 1]);
        const long half = kept_all / 2;
        EnsembleRequest push;
        push.start_time = burn_in_periods * period + snapped[j];
        push.x0_per_path = half_rows(at_phase[j], d, 0, half);
        push.dt = dt_snap;
        push.n_steps = gap_steps;
        push.record_steps = {gap_steps};
        push.n_paths = half;
        push.seed = seed ^ (0xF0D5ull + j);
        push.n_workers = n_workers;
        EnsembleResult pushed = run_ensemble(model, push);
        std::vector<double> forward;
        for (long p = 0; p < pushed.n_paths; ++p) {
            if (pushed.exploded[p]) continue;
            for (int i = 0; i < d; ++i)
                forward.push_back(pushed.records[0][static_cast<std::size_t>(p) * d + i]);
        }
        const long n_fwd = static_cast<long>(forward.size()) / d;

        const auto target_block =
            compact(record_index(burn_in_periods * m + phase_steps[j + 1]));
        auto b = half_rows(target_block, d, half, kept_all);
        const long n_b = kept_all - half;

        std::vector<double> pooled = forward;
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::vector<double> pm(d), pv(d);
        block_mean_var(pooled, n_fwd + n_b, d, pm, pv);
        const GridSpec grid = grid_from_moments(pm, pv, std::min(n_fwd, n_b));
        const auto hist_f = empirical_measure(forward, n_fwd, grid);
        const auto hist_b = empirical_measure(b, n_b, grid);
        const auto pooled_hist = empirical_measure(pooled, n_fwd + n_b, grid);
        const auto floor = tv_noise_floor_two_sample(pooled_hist, n_fwd, n_b,
                                                     kBootstrapReplicates, seed ^ (0xBEE5 + j));
        PushForwardEntry entry;
        entry.from_phase = snapped[j];
        entry.to_phase = snapped[j + 1];
        entry.tv = tv_distance(hist_f, hist_b);
        entry.threshold = floor.mean + 4.0 * floor.sd;
        entry.ok = entry.tv <= entry.threshold;
        report.push_forward.push_back(entry);
    }

    report.all_periodic = true;
    for (const auto& e : report.phases) report.all_periodic = report.all_periodic && e.periodic_ok;
    return report;
}

namespace {

/// Gaussian KDE with sorted samples and an 8-sigma evaluation window.
double kde_eval(const std::vector<double>& sorted, double h, double y) {
    const double cut = 8.0 * h;
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), y - cut);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), y + cut);
    double acc = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const double z = (y - *it) / h;
        acc += std::exp(-0.5 * z * z);
    }
    return acc / (static_cast<double>(sorted.size()) * h * 2.5066282746310005024);
}

double silverman_bandwidth(std::vector<double> v) {
    const double n = static_cast<double>(v.size());
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    std::sort(v.begin(), v.end());
    const auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double spread = std::min(std::sqrt(var), iqr / 1.34);
    return 0.9 * spread * std::pow(n, -0.2);
}

} // namespace

DoeblinEstimate doeblin_estimate(const SdeModel& model, double s, double k_lo, double k_hi,
                                 std::span<const double> start_grid, double dt,
                                 long n_paths_per_start, double bandwidth_mult,
                                 std::uint64_t seed, int phi_bins, int n_workers) {
    if (model.dim != 1) throw ValidationError("doeblin_estimate: 1D models only");
    if (start_grid.empty()) throw ValidationError("doeblin_estimate: start grid is empty");
    if (!(k_hi > k_lo)) throw ValidationError("doeblin_estimate: need k_hi > k_lo");
    for (double x : start_grid)
        if (x < k_lo || x > k_hi)
            throw ValidationError("doeblin_estimate: start points must lie in K");
    if (phi_bins < 4) throw ValidationError("doeblin_estimate: phi_bins too small");
    if (!(bandwidth_mult > 0.0)) throw ValidationError("doeblin_estimate: bandwidth_mult > 0");

    const double dt_snap = snap_dt_to_period(model.period, dt);
    const long m = std::llround(model.period / dt_snap);
    const std::size_t n_start = start_grid.size();

    // One-period samples from every start point.
    std::vector<std::vector<double>> samples(n_start);
    for (std::size_t i = 0; i < n_start; ++i) {
        EnsembleRequest req;
        req.start_time = s;
        req.x0 = {start_grid[i]};
        req.dt = dt_snap;
        req.n_steps = m;
        req.record_steps = {m};
        req.n_paths = n_paths_per_start;
        req.seed = seed ^ (0xD0EB11ull * (i + 1));
        req.n_workers = n_workers;
        EnsembleResult res = run_ensemble(model, req);
        if (res.n_exploded * 100 > res.n_paths)
            throw NumericalError("doeblin_estimate: more than 1% of paths exploded");
        auto& v = samples[i];
        v.reserve(res.n_paths);
        for (long p = 0; p < res.n_paths; ++p)
            if (!res.exploded[p]) v.push_back(res.records[0][p]);
        std::sort(v.begin(), v.end());
    }

    std::vector<double> bws(n_start);
    for (std::size_t i = 0; i < n_start; ++i) bws[i] = silverman_bandwidth(samples[i]);
    std::sort(bws.begin(), bws.end());
    const double h = bandwidth_mult * bws[n_start / 2];

    // Shared 8-point Gauss-Legendre nodes per phi bin; the same quadrature
    // backs eta, phi and the per-start bin masses, so the minorization
    // p_hat >= eta phi holds bin-wise by construction.
    static const double gl_nodes[8] = {-0.9602898564975363, -0.7966664774136267,
                                       -0.5255324099163290, -0.1834346424956498,
                                       0.1834346424956498,  0.5255324099163290,
                                       0.7966664774136267,  0.9602898564975363};
    static const double gl_weights[8] = {0.1012285362903763, 0.2223810344533745,
                                         0.3137066458778873, 0.3626837833783620,
                                         0.3626837833783620, 0.3137066458778873,
                                         0.2223810344533745, 0.1012285362903763};
    const double bin_w = (k_hi - k_lo) / phi_bins;

    auto integrate_bins = [&](double bw, std::vector<double>* min_bins,
                              std::vector<std::vector<double>>* per_start_bins) {
        if (min_bins) min_bins->assign(phi_bins, 0.0);
        if (per_start_bins)
            per_start_bins->assign(n_start, std::vector<double>(phi_bins, 0.0));
        double eta_acc = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : eta_acc) \
    num_threads(n_workers > 0 ? n_workers : omp_get_max_threads())
#endif
        for (int b = 0; b < phi_bins; ++b) {
            const double c = k_lo + (b + 0.5) * bin_w;
            double bin_min = 0.0;
            for (int q = 0; q < 8; ++q) {
                const double y = c + 0.5 * bin_w * gl_nodes[q];
                double mn = 0.0;
                for (std::size_t i = 0; i < n_start; ++i) {
                    const double v = kde_eval(samples[i], bw, y);
                    if (per_start_bins)
                        (*per_start_bins)[i][b] += gl_weights[q] * 0.5 * bin_w * v;
                    mn = i == 0 ? v : std::min(mn, v);
                }
                bin_min += gl_weights[q] * 0.5 * bin_w * mn;
            }
            if (min_bins) (*min_bins)[b] = bin_min;
            eta_acc += bin_min;
        }
        return eta_acc;
    };

    DoeblinEstimate est;
    est.start_points.assign(start_grid.begin(), start_grid.end());
    est.bandwidth = h;

    std::vector<double> min_bins;
    est.eta = integrate_bins(h, &min_bins, &est.kernel_bin_mass);
    est.eta_half_bandwidth = integrate_bins(0.5 * h, nullptr, nullptr);
    est.eta_double_bandwidth = integrate_bins(2.0 * h, nullptr, nullptr);
    est.degenerate = !(est.eta > 1e-12);

    est.phi.grid.lo = {k_lo};
    est.phi.grid.hi = {k_hi};
    est.phi.grid.bins = {phi_bins};
    est.phi.n_samples = 0;
    est.phi.out_of_box = 0.0;
    est.phi.masses.assign(phi_bins, 0.0);
    if (!est.degenerate)
        for (int b = 0; b < phi_bins; ++b) est.phi.masses[b] = min_bins[b] / est.eta;
    return est;
}

} // namespace pmsde
