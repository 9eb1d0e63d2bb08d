#include "pmsde/empirical.hpp"

#include <algorithm>
#include <cmath>

#include "pmsde/errors.hpp"
#include "pmsde/rng.hpp"

namespace pmsde {

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNodes[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeights[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                  0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                  0.2223810344533745, 0.1012285362903763};

} // namespace

long GridSpec::total_bins() const {
    long total = 1;
    for (int b : bins) total *= b;
    return total;
}

void GridSpec::validate() const {
    if (bins.empty() || lo.size() != bins.size() || hi.size() != bins.size())
        throw ValidationError("GridSpec: lo/hi/bins sizes must match and be non-empty");
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (bins[i] < 1) throw ValidationError("GridSpec: bins must be >= 1");
        if (!(hi[i] > lo[i])) throw ValidationError("GridSpec: need hi > lo");
    }
}

long GridSpec::flat_index(std::span<const double> x) const {
    long idx = 0;
    for (std::size_t a = 0; a < bins.size(); ++a) {
        if (x[a] < lo[a] || x[a] >= hi[a]) return -1;
        const double w = (hi[a] - lo[a]) / bins[a];
        long k = static_cast<long>((x[a] - lo[a]) / w);
        if (k >= bins[a]) k = bins[a] - 1; // right edge rounding
        idx = idx * bins[a] + k;
    }
    return idx;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < bins.size(); ++a) v *= bin_width(static_cast<int>(a));
    return v;
}

EmpiricalMeasure empirical_measure(std::span<const double> samples, long n_rows,
                                   const GridSpec& grid) {
    grid.validate();
    if (n_rows < 1) throw ValidationError("empirical_measure: empty sample set");
    const int d = grid.dim();
    if (samples.size() != static_cast<std::size_t>(n_rows) * d)
        throw ValidationError("empirical_measure: sample buffer size mismatch");

    EmpiricalMeasure out;
    out.grid = grid;
    out.masses.assign(grid.total_bins(), 0.0);
    out.n_samples = n_rows;
    long outside = 0;
    for (long r = 0; r < n_rows; ++r) {
        const long idx = grid.flat_index(samples.subspan(static_cast<std::size_t>(r) * d, d));
        if (idx < 0) ++outside;
        else out.masses[idx] += 1.0;
    }
    const double inv = 1.0 / static_cast<double>(n_rows);
    for (auto& m : out.masses) m *= inv;
    out.out_of_box = static_cast<double>(outside) * inv;
    return out;
}

double tv_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (!(mu.grid == nu.grid)) throw ValidationError("tv_distance: grid mismatch");
    double acc = std::abs(mu.out_of_box - nu.out_of_box);
    for (std::size_t i = 0; i < mu.masses.size(); ++i) acc += std::abs(mu.masses[i] - nu.masses[i]);
    return 0.5 * acc;
}

EmpiricalMeasure bin_gaussian(const GaussianMeasure& g, const GridSpec& grid) {
    grid.validate();
    const int d = grid.dim();
    if (g.dim() != d) throw ValidationError("bin_gaussian: dimension mismatch");
    for (int i = 0; i < d; ++i)
        if (!(g.cov(i, i) > 0.0))
            throw ValidationError("bin_gaussian: degenerate covariance");
    if (!g.cov.allFinite()) throw ValidationError("bin_gaussian: non-finite covariance");

    EmpiricalMeasure out;
    out.grid = grid;
    out.masses.assign(grid.total_bins(), 0.0);
    out.n_samples = 0;

    bool diagonal = true;
    for (int i = 0; i < d && diagonal; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && std::abs(g.cov(i, j)) > 1e-14 * std::sqrt(g.cov(i, i) * g.cov(j, j)))
                { diagonal = false; break; }

    if (diagonal) {
        // Tensor product of per-axis interval masses.
        std::vector<std::vector<double>> axis(d);
        for (int a = 0; a < d; ++a) {
            axis[a].resize(grid.bins[a]);
            const double w = grid.bin_width(a);
            for (int k = 0; k < grid.bins[a]; ++k)
                axis[a][k] = gaussian_interval_mass(g.mean(a), g.cov(a, a), grid.lo[a] + k * w,
                                                    grid.lo[a] + (k + 1) * w);
        }
        std::vector<int> id(d, 0);
        for (long flat = 0; flat < grid.total_bins(); ++flat) {
            double m = 1.0;
            long rem = flat;
            for (int a = d - 1; a >= 0; --a) {
                id[a] = static_cast<int>(rem % grid.bins[a]);
                rem /= grid.bins[a];
            }
            for (int a = 0; a < d; ++a) m *= axis[a][id[a]];
            out.masses[flat] = m;
        }
    } else if (d == 2) {
        Eigen::Matrix2d cov = g.cov;
        Eigen::Matrix2d prec = cov.inverse();
        const double norm = 1.0 / (2.0 * M_PI * std::sqrt(cov.determinant()));
        const double w0 = grid.bin_width(0), w1 = grid.bin_width(1);
        for (int i = 0; i < grid.bins[0]; ++i) {
            for (int j = 0; j < grid.bins[1]; ++j) {
                const double x0 = grid.lo[0] + (i + 0.5) * w0;
                const double y0 = grid.lo[1] + (j + 0.5) * w1;
                double acc = 0.0;
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b) {
                        const double dx = x0 + 0.5 * w0 * kGlNodes[a] - g.mean(0);
                        const double dy = y0 + 0.5 * w1 * kGlNodes[b] - g.mean(1);
                        const double q = prec(0, 0) * dx * dx + 2.0 * prec(0, 1) * dx * dy +
                                         prec(1, 1) * dy * dy;
                        acc += kGlWeights[a] * kGlWeights[b] * std::exp(-0.5 * q);
                    }
                out.masses[static_cast<long>(i) * grid.bins[1] + j] =
                    acc * norm * 0.25 * w0 * w1;
            }
        }
    } else {
        throw ValidationError("bin_gaussian: full covariance supported in 2D only");
    }

    double total = 0.0;
    for (double m : out.masses) total += m;
    out.out_of_box = std::max(0.0, 1.0 - total);
    return out;
}

double tv_to_gaussian(const EmpiricalMeasure& mu, const GaussianMeasure& g) {
    return tv_distance(mu, bin_gaussian(g, mu.grid));
}

GridSpec default_grid_for(const GaussianMeasure& g, long n_samples) {
    const int d = g.dim();
    GridSpec grid;
    grid.lo.resize(d);
    grid.hi.resize(d);
    grid.bins.resize(d);
    for (int a = 0; a < d; ++a) {
        const double sd = std::sqrt(g.cov(a, a));
        grid.lo[a] = g.mean(a) - 8.0 * sd;
        grid.hi[a] = g.mean(a) + 8.0 * sd;
        const double iqr = 1.3489795003921634 * sd;
        const double h = 2.0 * iqr * std::pow(static_cast<double>(std::max<long>(n_samples, 2)),
                                              -1.0 / 3.0);
        int bins = static_cast<int>(std::ceil((grid.hi[a] - grid.lo[a]) / h));
        grid.bins[a] = std::clamp(bins, 20, 400);
    }
    return grid;
}

namespace {

/// Draw a histogram of n multinomial samples from the category masses
/// (bins plus one out-of-box category) by inverse-CDF lookup.
void multinomial_draw(const std::vector<double>& cdf, long n, PathRng& rng,
                      std::vector<double>& counts) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (long i = 0; i < n; ++i) {
        const double u = rng.uniform01() * cdf.back();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        counts[static_cast<std::size_t>(it - cdf.begin())] += 1.0;
    }
    for (auto& c : counts) c /= static_cast<double>(n);
}

std::vector<double> cumulative_masses(const EmpiricalMeasure& m) {
    std::vector<double> cdf(m.masses.size() + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.masses.size(); ++i) {
        acc += m.masses[i];
        cdf[i] = acc;
    }
    cdf.back() = acc + std::max(0.0, m.out_of_box);
    return cdf;
}

double tv_between_category_vectors(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return 0.5 * acc;
}

NoiseFloor summarize(const std::vector<double>& tvs) {
    double mean = 0.0;
    for (double v : tvs) mean += v;
    mean /= static_cast<double>(tvs.size());
    double var = 0.0;
    for (double v : tvs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(std::max<std::size_t>(tvs.size() - 1, 1));
    return {mean, std::sqrt(var)};
}

} // namespace

NoiseFloor tv_noise_floor_vs_target(const EmpiricalMeasure& target, long n_samples, int replicates,
                                    std::uint64_t seed) {
    if (replicates < 2) throw ValidationError("tv_noise_floor_vs_target: need >= 2 replicates");
    const auto cdf = cumulative_masses(target);
    std::vector<double> truth(target.masses.begin(), target.masses.end());
    truth.push_back(std::max(0.0, target.out_of_box));
    PathRng rng(seed, 0xF100F);
    std::vector<double> draw(truth.size());
    std::vector<double> tvs(replicates);
    for (int b = 0; b < replicates; ++b) {
        multinomial_draw(cdf, n_samples, rng, draw);
        tvs[b] = tv_between_category_vectors(draw, truth);
    }
    return summarize(tvs);
}

NoiseFloor tv_noise_floor_two_sample(const EmpiricalMeasure& pooled, long n1, long n2,
                                     int replicates, std::uint64_t seed) {
    if (replicates < 2) throw ValidationError("tv_noise_floor_two_sample: need >= 2 replicates");
    const auto cdf = cumulative_masses(pooled);
    PathRng rng(seed, 0xF200F);
    std::vector<double> draw1(pooled.masses.size() + 1), draw2(draw1.size());
    std::vector<double> tvs(replicates);
    for (int b = 0; b < replicates; ++b) {
        multinomial_draw(cdf, n1, rng, draw1);
        multinomial_draw(cdf, n2, rng, draw2);
        tvs[b] = tv_between_category_vectors(draw1, draw2);
    }
    return summarize(tvs);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
    if (a.empty() || b.empty()) throw ValidationError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    KsResult res;
    res.statistic = d;
    res.threshold = c * std::sqrt((na + nb) / (na * nb));
    res.pass = d <= res.threshold;
    return res;
}

} // namespace pmsde
