#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "blockade/fitting.hpp"
#include "blockade/fluctuations.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/parallel.hpp"
#include "blockade/rng.hpp"
#include "blockade/stochastic.hpp"
#include "blockade/transition.hpp"

namespace blockade {

/// One drive of a finite-size scaling sweep.
struct ScalingPoint {
    double drive = 0.0;              ///< (eta/kappa)^2, photons
    double width = 0.0;              ///< t90 - t10, us
    double n_th_integrated = std::numeric_limits<double>::quiet_NaN();    ///< time average over [t10, t90]
    double n_th_time_integral = std::numeric_limits<double>::quiet_NaN(); ///< photons * us over [t10, t90]
    bool included = false;           ///< usable in a power-law fit
    std::string note;
};

struct SweepOptions {
    bool noise = true;          ///< false: deterministic slow-manifold widths only
    double window = 500.0;      ///< fluctuation analysis window, us
    double t_end = 0.0;         ///< us; 0 sizes each run from a mean-field pre-run
    double margin = 1.3;        ///< t_end = margin * t90(mean field) + 2 windows
    IntegratorControls controls = stochastic_controls();
    unsigned threads = 0;
};

namespace detail {

/// Time average and time integral of n_th over window centres in [a, b].
inline std::pair<double, double> integrate_n_th(const FluctuationSeries& f, double a, double b)
{
    double sum = 0.0;
    std::size_t count = 0;
    double integral = 0.0;
    double prev_t = std::numeric_limits<double>::quiet_NaN();
    double prev_v = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f.t[k] < a || f.t[k] > b || !std::isfinite(f.n_th[k])) continue;
        sum += f.n_th[k];
        ++count;
        if (std::isfinite(prev_t)) integral += 0.5 * (prev_v + f.n_th[k]) * (f.t[k] - prev_t);
        prev_t = f.t[k];
        prev_v = f.n_th[k];
    }
    if (count == 0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    return {sum / static_cast<double>(count), integral};
}

} // namespace detail

/// Transition width and integrated thermal photon number for each drive
/// eta/kappa. Drive i uses the stochastic seed derive_seed(cfg.rng_seed, i),
/// so repeated drives give independent, statistically equivalent points.
inline std::vector<ScalingPoint> scaling_sweep(const PhysicalParams& params, const std::vector<double>& drives,
                                               const StochasticConfig& cfg, const SweepOptions& opt = {})
{
    params.validate();
    cfg.validate();
    for (std::size_t i = 0; i < drives.size(); ++i) {
        if (!(drives[i] > 0.0)) throw ParameterError("drives must be positive");
        if (i > 0 && drives[i] < drives[i - 1]) throw ParameterError("drives must be ascending");
    }

    std::vector<ScalingPoint> points(drives.size());
    parallel_for(drives.size(), opt.threads, [&](std::size_t i) {
        PhysicalParams p = params.with_drive(drives[i]);
        p.n_atoms_total = static_cast<double>(cfg.n_atoms);
        ScalingPoint& pt = points[i];
        pt.drive = p.empty_cavity_photons();

        double t_end = opt.t_end;
        if (t_end <= 0.0) {
            double guess = estimated_crossing_time(p, 0.9);
            if (!std::isfinite(guess) || guess <= 0.0) guess = 100.0 * opt.window;
            const auto mf = simulate_transition(p, 1.2 * guess, opt.controls, 6);
            if (!mf) {
                pt.note = "no transition in mean-field pre-run";
                return;
            }
            t_end = opt.margin * *transition_report(*mf).t90 + 2.0 * opt.window;
        }
        // whole output intervals keep every trace uniformly sampled
        const double grid = opt.noise ? opt.window : opt.controls.output_dt;
        t_end = std::ceil(t_end / grid - 1e-9) * grid;

        if (!opt.noise) {
            const Trajectory tr = integrate_slow(p, MeanFieldState::vacuum(p.n_atoms_total), t_end, opt.controls);
            const auto rep = transition_report(trace_from(tr, pt.drive));
            if (!rep.has_transition()) {
                pt.note = "no transition (" + rep.missing + ")";
                return;
            }
            pt.width = *rep.width();
            pt.note = "noise off";
            return;
        }

        StochasticConfig member = cfg;
        member.rng_seed = derive_seed(cfg.rng_seed, i);
        IntegratorControls controls = opt.controls;
        controls.output_dt = std::max(cfg.dt_jump, std::round(opt.window / cfg.dt_jump) * cfg.dt_jump);
        const StochasticRun run = simulate_trajectory(p, member, t_end, controls);

        const auto smoothing = static_cast<std::size_t>(std::llround(opt.window / run.counts.bin_time));
        const auto rep = transition_report(trace_from(run.counts, pt.drive), smoothing);
        if (!rep.has_transition()) {
            pt.note = "no transition (" + rep.missing + ")";
            return;
        }
        pt.width = *rep.width();
        const FluctuationSeries fl = fluctuations(run.counts, opt.window);
        const auto [avg, integral] = detail::integrate_n_th(fl, *rep.t10, *rep.t90);
        pt.n_th_integrated = avg;
        pt.n_th_time_integral = integral;
        pt.included = pt.width > 0.0 && avg > 0.0;
        if (!pt.included) pt.note = "non-positive width or n_th";
    });
    return points;
}

/// Power-law fit of n_th_integrated against width over the included points.
inline PowerLawFit fit_scaling(const std::vector<ScalingPoint>& points)
{
    std::vector<double> x, y;
    std::size_t excluded = 0;
    for (const auto& p : points) {
        if (!p.included) {
            ++excluded;
            continue;
        }
        x.push_back(p.width);
        y.push_back(p.n_th_integrated);
    }
    PowerLawFit fit = power_law_fit(x, y);
    fit.excluded_points = excluded;
    return fit;
}

} // namespace blockade
