#include "pmsde/reference.hpp"

#include <cmath>
#include <limits>

#include "pmsde/rng.hpp"

namespace pmsde::reference {

EnsembleResult run_ensemble_serial(const SdeModel& model, const EnsembleRequest& req) {
    const int d = model.dim;
    EnsembleResult res;
    res.n_paths = req.n_paths;
    res.dim = d;
    res.dt = req.dt;
    res.record_steps = req.record_steps;
    res.records.assign(req.record_steps.size(),
                       std::vector<double>(static_cast<std::size_t>(req.n_paths) * d));
    res.exploded.assign(req.n_paths, 0);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double sqrt_dt = std::sqrt(req.dt);
    std::vector<double> x(d), b(d), sig(static_cast<std::size_t>(d) * d), dw(d);
    for (long p = 0; p < req.n_paths; ++p) {
        PathRng rng(req.seed, static_cast<std::uint64_t>(p));
        const double* start = req.x0_per_path.empty()
                                  ? req.x0.data()
                                  : req.x0_per_path.data() + static_cast<std::size_t>(p) * d;
        for (int i = 0; i < d; ++i) x[i] = start[i];
        if (model.constant_diffusion)
            for (int i = 0; i < d * d; ++i) sig[i] = model.sigma_const[i];
        std::size_t rec = 0;
        bool dead = false;
        for (long k = 0; k <= req.n_steps; ++k) {
            if (rec < req.record_steps.size() && req.record_steps[rec] == k) {
                double* slot = res.records[rec].data() + static_cast<std::size_t>(p) * d;
                for (int i = 0; i < d; ++i) slot[i] = dead ? nan : x[i];
                ++rec;
            }
            if (k == req.n_steps) break;
            if (dead) continue;
            const double t = req.start_time + static_cast<double>(k) * req.dt;
            model.drift(t, x, b);
            if (!model.constant_diffusion) model.diffusion(t, x, sig);
            for (int i = 0; i < d; ++i) dw[i] = sqrt_dt * rng.gaussian();
            for (int i = 0; i < d; ++i) {
                double acc = x[i] + b[i] * req.dt;
                for (int j = 0; j < d; ++j) acc += sig[i * d + j] * dw[j];
                x[i] = acc;
            }
            double norm_sq = 0.0;
            bool finite = true;
            for (double v : x) {
                if (!std::isfinite(v)) finite = false;
                norm_sq += v * v;
            }
            if (!finite || norm_sq > 1e24) {
                dead = true;
                res.exploded[p] = 1;
            }
        }
    }
    for (auto flag : res.exploded) res.n_exploded += flag;
    return res;
}

} // namespace pmsde::reference
