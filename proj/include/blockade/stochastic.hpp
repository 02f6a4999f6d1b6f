#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/parallel.hpp"
#include "blockade/rng.hpp"

namespace blockade {

/// How surviving populations are adjusted after atoms escape to dark states.
enum class EscapeRule {
    proportional,  ///< N_g and N_e both scaled onto the surviving budget
    from_excited   ///< the correction is applied to N_e, any excess to N_g
};

struct StochasticConfig {
    std::size_t n_atoms = 20'000;
    std::uint64_t rng_seed = 1;
    double dt_jump = 1.0;             ///< us
    double detector_efficiency = 1.0; ///< in (0, 1]
    double bin_time = 1.0;            ///< us
    EscapeRule escape_rule = EscapeRule::proportional;

    void validate() const
    {
        if (n_atoms < 1) throw ParameterError("n_atoms must be at least 1");
        if (!(dt_jump > 0.0)) throw ParameterError("dt_jump must be positive");
        if (!(bin_time > 0.0)) throw ParameterError("bin_time must be positive");
        if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0))
            throw ParameterError("detector efficiency must lie in (0, 1]");
    }
};

/// Photodetection record: counts per bin starting at t[k].
struct CountRecord {
    std::vector<double> t;
    std::vector<std::uint32_t> counts;
    double bin_time = 1.0;
    double calibration = 1.0; ///< intracavity photons per count, 1/(2 kappa eps tau_b)
    std::uint64_t seed = 0;
    double detector_efficiency = 1.0;

    std::size_t size() const { return counts.size(); }
};

struct StochasticRun {
    Trajectory trajectory;
    CountRecord counts;
    std::vector<std::size_t> atoms; ///< integer atom budget at each trajectory sample
};

/// Integrator settings for stochastic runs: looser than the deterministic
/// defaults, since each jump perturbs the populations by whole atoms.
inline IntegratorControls stochastic_controls(double output_dt = 500.0)
{
    IntegratorControls c = slow_controls(output_dt);
    c.rtol = 1e-6;
    c.atol = 1e-3;
    return c;
}

namespace detail {

/// Mean of a piecewise-linear signal (samples every dt from 0) over [a, b].
inline double segment_average(const std::vector<double>& samples, double dt, double a, double b)
{
    const auto last = static_cast<double>(samples.size() - 1);
    auto value_at = [&](double t) {
        const double x = std::clamp(t / dt, 0.0, last);
        const auto i = std::min(static_cast<std::size_t>(x), samples.size() - 2);
        const double f = x - static_cast<double>(i);
        return samples[i] + f * (samples[i + 1] - samples[i]);
    };
    // trapezoid over every breakpoint inside [a, b]; exact for linear pieces
    double sum = 0.0;
    double prev_t = a;
    double prev_v = value_at(a);
    for (auto k = static_cast<std::size_t>(std::floor(a / dt)) + 1; static_cast<double>(k) * dt < b; ++k) {
        const double tk = static_cast<double>(k) * dt;
        const double vk = value_at(tk);
        sum += 0.5 * (prev_v + vk) * (tk - prev_t);
        prev_t = tk;
        prev_v = vk;
    }
    sum += 0.5 * (prev_v + value_at(b)) * (b - prev_t);
    return sum / (b - a);
}

inline std::size_t exact_ratio(double big, double small, const char* what)
{
    const double r = big / small;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * n) throw ParameterError(what);
    return static_cast<std::size_t>(n);
}

} // namespace detail

/// Photon counts with mean eps * 2 kappa * n(t) * tau_b per bin, n(t) the
/// intracavity photon number sampled every `dt` from t = 0.
template <class Urbg>
CountRecord detect_photons(const std::vector<double>& photons, double dt, double kappa, double efficiency,
                           double bin_time, Urbg& rng)
{
    CountRecord rec;
    rec.bin_time = bin_time;
    rec.detector_efficiency = efficiency;
    rec.calibration = 1.0 / (2.0 * kappa * efficiency * bin_time);
    if (photons.size() < 2) return rec;

    const double t_end = dt * static_cast<double>(photons.size() - 1);
    const auto n_bins = static_cast<std::size_t>(std::floor(t_end / bin_time + 1e-9));
    rec.t.reserve(n_bins);
    rec.counts.reserve(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double b0 = static_cast<double>(k) * bin_time;
        const double n_mean = detail::segment_average(photons, dt, b0, b0 + bin_time);
        const double mean = std::max(n_mean, 0.0) / rec.calibration;
        if (mean > 4.0e9) throw NumericalError("photon count per bin overflows the count record");
        std::uint32_t c = 0;
        if (mean > 0.0) c = static_cast<std::uint32_t>(std::poisson_distribution<std::int64_t>(mean)(rng));
        rec.t.push_back(b0);
        rec.counts.push_back(c);
    }
    return rec;
}

/// Finite-size trajectory: the slow-manifold dynamics with the dark-state
/// escape channel discretized into integer Poisson atom-loss events every
/// dt_jump, followed by shot-noise-limited photodetection. After each step the
/// populations are rescaled onto the integer budget, so the mean loss matches
/// the mean-field sink 2 Gamma N_e.
///
/// The jump stream and the detection stream use independent sub-seeds of
/// cfg.rng_seed, so the atom trajectory does not depend on detector settings.
/// `controls.output_dt` must be a multiple of cfg.dt_jump.
inline StochasticRun simulate_trajectory(const PhysicalParams& params, const StochasticConfig& cfg, double t_end,
                                         const IntegratorControls& controls = stochastic_controls())
{
    params.validate();
    cfg.validate();
    detail::check_span(t_end, controls);
    const std::size_t per_output =
        detail::exact_ratio(controls.output_dt, cfg.dt_jump, "output_dt must be a multiple of dt_jump");
    const auto n_jumps = static_cast<std::size_t>(std::floor(t_end / cfg.dt_jump + 1e-9));
    if (n_jumps == 0) throw ParameterError("t_end shorter than one jump step");

    Engine jump_rng = make_engine(derive_seed(cfg.rng_seed, 0));
    Engine detect_rng = make_engine(derive_seed(cfg.rng_seed, 1));

    auto rhs = [&params](const ode::Vec<2>& y) {
        return detail::slow_rhs(params, y);
    };
    ode::Ros2<2, decltype(rhs)> stepper(rhs);
    const ode::Tolerances tol{controls.rtol, controls.atol};
    ode::StepLimits limits;
    limits.max_steps = controls.max_steps;
    limits.h_initial = 1e-3 / (2.0 * (params.gamma + params.Gamma));
    if (controls.max_step > 0.0) limits.h_max = controls.max_step;
    ode::StepperState st;

    StochasticRun run;
    if (!params.is_dispersive())
        run.trajectory.warnings.emplace_back("dispersive guard violated: |delta_A| < 5 gamma");

    std::size_t budget = cfg.n_atoms;
    ode::Vec<2> y{static_cast<double>(budget), 0.0};
    std::vector<double> photons;
    photons.reserve(n_jumps + 1);

    MeanFieldState s = detail::slow_state(params, y[0], y[1]);
    photons.push_back(s.photons());
    run.trajectory.push(0.0, s);
    run.atoms.push_back(budget);

    bool warned = false;
    for (std::size_t k = 1; k <= n_jumps; ++k) {
        const double t0 = static_cast<double>(k - 1) * cfg.dt_jump;
        const double t1 = static_cast<double>(k) * cfg.dt_jump;
        const double n_e_start = y[1];
        if (budget > 0) {
            try {
                ode::advance(stepper, y, t0, t1, tol, limits, st);
            } catch (const NumericalError& e) {
                throw IntegrationError(std::string("stochastic integration failed: ") + e.what(), t0, s);
            }
            detail::enforce_positivity(y[0], y[1], static_cast<double>(budget), controls.positivity_epsilon,
                                       run.trajectory.warnings, warned);

            // The deterministic step already removed the mean loss; the jump
            // replaces it by an integer Poisson draw with the same mean.
            const double mean_loss = params.Gamma * (n_e_start + y[1]) * cfg.dt_jump;
            std::size_t lost = 0;
            if (mean_loss > 0.0)
                lost = static_cast<std::size_t>(std::poisson_distribution<std::int64_t>(mean_loss)(jump_rng));
            lost = std::min(lost, budget);
            budget -= lost;
            const double target = static_cast<double>(budget);
            const double current = y[0] + y[1];
            if (budget == 0 || current <= 0.0) {
                y = {0.0, 0.0};
            } else if (cfg.escape_rule == EscapeRule::proportional) {
                const double f = target / current;
                y[0] *= f;
                y[1] *= f;
            } else {
                y[1] += target - current;
                if (y[1] < 0.0) {
                    y[0] = std::max(y[0] + y[1], 0.0);
                    y[1] = 0.0;
                }
            }
        }
        s = detail::slow_state(params, y[0], y[1]);
        photons.push_back(s.photons());
        if (k % per_output == 0) {
            run.trajectory.push(t1, s);
            run.atoms.push_back(budget);
        }
    }
    run.trajectory.steps = st.accepted;

    run.counts = detect_photons(photons, cfg.dt_jump, params.kappa, cfg.detector_efficiency, cfg.bin_time,
                                detect_rng);
    run.counts.seed = cfg.rng_seed;
    return run;
}

/// n_traj independent trajectories; trajectory i uses seed derive_seed(cfg.rng_seed, i).
/// Output is identical for any thread count.
inline std::vector<StochasticRun> ensemble_run(const PhysicalParams& params, const StochasticConfig& cfg,
                                               double t_end, std::size_t n_traj,
                                               const IntegratorControls& controls = stochastic_controls(),
                                               unsigned threads = 0)
{
    if (n_traj < 1) throw ParameterError("n_traj must be at least 1");
    std::vector<StochasticRun> runs(n_traj);
    parallel_for(n_traj, threads, [&](std::size_t i) {
        StochasticConfig member = cfg;
        member.rng_seed = derive_seed(cfg.rng_seed, i);
        runs[i] = simulate_trajectory(params, member, t_end, controls);
    });
    return runs;
}

/// Rescales a parameter set to a different atom number at fixed collective
/// coupling g^2 N and fixed drive per atom (eta/kappa)^2 / N. The mean-field
/// trajectory is invariant under this map, so only finite-size effects change.
inline PhysicalParams scale_atom_number(const PhysicalParams& p, double n_atoms)
{
    if (!(n_atoms > 0.0) || !(p.n_atoms_total > 0.0)) throw ParameterError("atom numbers must be positive");
    const double r = n_atoms / p.n_atoms_total;
    PhysicalParams q = p;
    q.g = p.g / std::sqrt(r);
    q.eta = p.eta * std::sqrt(r);
    q.n_atoms_total = n_atoms;
    return q;
}

} // namespace blockade
