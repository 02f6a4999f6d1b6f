#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/ode.hpp"
#include "blockade/params.hpp"

namespace blockade {

using cplx = std::complex<double>;

/// Mean-field variables: cavity amplitude a, collective polarization M and the
/// ground/excited populations. |a|^2 is the intracavity photon number.
struct MeanFieldState {
    cplx a{};
    cplx M{};
    double N_g = 0.0;
    double N_e = 0.0;

    double photons() const { return std::norm(a); }
    double population() const { return N_g + N_e; }
    /// Effective atom number entering the dispersive transmission formula.
    double effective_atoms() const { return 0.5 * (N_g - N_e); }

    /// Cavity vacuum with every atom in the ground state.
    static MeanFieldState vacuum(double n_atoms) { return {cplx{}, cplx{}, n_atoms, 0.0}; }
};

struct Trajectory {
    std::vector<double> t;
    std::vector<MeanFieldState> states;
    std::vector<double> intensity; ///< |a(t)|^2
    std::vector<std::string> warnings;
    std::size_t steps = 0;

    std::size_t size() const { return t.size(); }

    void push(double time, const MeanFieldState& s)
    {
        t.push_back(time);
        states.push_back(s);
        intensity.push_back(s.photons());
    }
};

struct IntegratorControls {
    double rtol = 1e-8;
    double atol = 1e-8;
    double output_dt = 500.0;   ///< us
    double max_step = 0.0;      ///< us; 0 = unlimited
    std::size_t max_steps = 20'000'000;
    bool freeze_populations = false;
    double positivity_epsilon = 1e-9; ///< relative to the atom number
};

/// Integration failure carrying the last state that passed every check.
class IntegrationError : public NumericalError {
public:
    IntegrationError(const std::string& msg, double t, MeanFieldState last)
        : NumericalError(msg), time_(t), last_(last) {}
    double time() const noexcept { return time_; }
    const MeanFieldState& last_state() const noexcept { return last_; }

private:
    double time_;
    MeanFieldState last_;
};

class StepBudgetExceeded : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

/// Right-hand side of the mean-field equations of motion.
inline MeanFieldState derivative(const PhysicalParams& p, const MeanFieldState& s)
{
    const double ge = p.effective_coupling();
    const cplx i{0.0, 1.0};
    const double pump = ge * 2.0 * std::real(std::conj(s.a) * s.M); // g(a*M + M*a)

    MeanFieldState d;
    d.a = (i * p.delta_C - p.kappa) * s.a + ge * s.M + p.eta;
    d.M = (i * p.delta_A - p.gamma - p.Gamma) * s.M + ge * (s.N_e - s.N_g) * s.a;
    d.N_e = -pump - 2.0 * (p.gamma + p.Gamma) * s.N_e;
    d.N_g = pump + 2.0 * p.gamma * s.N_e;
    return d;
}

namespace detail {

inline ode::Vec<6> pack(const MeanFieldState& s)
{
    return {s.a.real(), s.a.imag(), s.M.real(), s.M.imag(), s.N_g, s.N_e};
}

inline MeanFieldState unpack(const ode::Vec<6>& y)
{
    return {cplx{y[0], y[1]}, cplx{y[2], y[3]}, y[4], y[5]};
}

/// Quasi-steady (a, M) for given populations: the linear system
///   (i dC - kappa) a + g M            = -eta
///   g (N_e - N_g) a + (i dA - G_t) M  = 0
/// solved by Cramer's rule.
inline std::pair<cplx, cplx> solve_quasi_steady(const PhysicalParams& p, double N_g, double N_e)
{
    const double ge = p.effective_coupling();
    const cplx a11{-p.kappa, p.delta_C};
    const cplx a22{-(p.gamma + p.Gamma), p.delta_A};
    const double a12 = ge;
    const double a21 = ge * (N_e - N_g);
    const cplx det = a11 * a22 - a12 * a21;
    const double scale = std::abs(a11 * a22) + std::abs(a12 * a21);
    if (!(std::abs(det) > 1e-13 * scale)) throw NumericalError("singular quasi-steady system");
    return {-p.eta * a22 / det, p.eta * a21 / det};
}

/// Population equations with (a, M) on the quasi-steady manifold.
inline ode::Vec<2> slow_rhs(const PhysicalParams& p, const ode::Vec<2>& y)
{
    const double N_g = y[0];
    const double N_e = y[1];
    const auto [a, M] = solve_quasi_steady(p, N_g, N_e);
    const double pump = p.effective_coupling() * 2.0 * std::real(std::conj(a) * M);
    return {pump + 2.0 * p.gamma * N_e, -pump - 2.0 * (p.gamma + p.Gamma) * N_e};
}

inline MeanFieldState slow_state(const PhysicalParams& p, double N_g, double N_e)
{
    const auto [a, M] = solve_quasi_steady(p, N_g, N_e);
    return {a, M, N_g, N_e};
}

inline std::vector<double> output_grid(double t_end, double dt)
{
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
    grid.reserve(n + 2);
    for (std::size_t k = 0; k <= n; ++k) grid.push_back(static_cast<double>(k) * dt);
    if (t_end - grid.back() > 1e-9 * dt) grid.push_back(t_end);
    return grid;
}

inline void check_span(double t_end, const IntegratorControls& c)
{
    if (!(std::isfinite(t_end) && t_end > 0.0)) throw ParameterError("t_end must be positive");
    if (!(c.output_dt > 0.0)) throw ParameterError("output_dt must be positive");
    if (!(c.rtol > 0.0 && c.atol > 0.0)) throw ParameterError("tolerances must be positive");
}

/// Clamps populations that dipped below zero by round-off; records a warning
/// the first time a dip exceeds the tolerance.
inline void enforce_positivity(double& N_g, double& N_e, double scale, double eps_rel,
                               std::vector<std::string>& warnings, bool& warned)
{
    const double eps = eps_rel * std::max(scale, 1.0);
    for (double* v : {&N_g, &N_e}) {
        if (*v < 0.0) {
            if (*v < -eps && !warned) {
                warnings.emplace_back("negative population clamped to zero");
                warned = true;
            }
            *v = 0.0;
        }
    }
}

} // namespace detail

/// Closed-form quasi-steady cavity field and polarization for fixed populations.
inline std::pair<cplx, cplx> steady_state(const PhysicalParams& params, double N_g, double N_e)
{
    if (N_g < 0.0 || N_e < 0.0) throw ParameterError("populations must be non-negative");
    return detail::solve_quasi_steady(params, N_g, N_e);
}

/// Adaptive Dormand-Prince integration of the full equations, sampled every
/// `controls.output_dt` from 0 to t_end. Meant for windows up to ~1e5/kappa.
inline Trajectory integrate_full(const PhysicalParams& params, const MeanFieldState& s0, double t_end,
                                 const IntegratorControls& controls = {})
{
    params.validate();
    detail::check_span(t_end, controls);

    // explicit stability bound: h * |lambda_max| <~ 3.3 for DOPRI5
    const double n_pop = std::max(s0.population(), 0.0);
    const double lambda_max = std::max({std::hypot(params.delta_A, params.gamma + params.Gamma),
                                        std::hypot(params.delta_C, params.kappa),
                                        params.effective_coupling() * std::sqrt(n_pop),
                                        2.0 * (params.gamma + params.Gamma)});
    const double estimated_steps = t_end * lambda_max / 3.3;
    if (estimated_steps > static_cast<double>(controls.max_steps))
        throw StepBudgetExceeded("span needs ~" + std::to_string(static_cast<long long>(estimated_steps)) +
                                     " steps, over the budget; use the slow-manifold integrator",
                                 0.0, s0);

    auto rhs = [&params, frozen = controls.freeze_populations](const ode::Vec<6>& y) {
        MeanFieldState d = derivative(params, detail::unpack(y));
        if (frozen) d.N_g = d.N_e = 0.0;
        return detail::pack(d);
    };
    ode::DormandPrince45<6, decltype(rhs)> stepper(rhs);

    const ode::Tolerances tol{controls.rtol, controls.atol};
    ode::StepLimits limits;
    limits.max_steps = controls.max_steps;
    limits.h_initial = 1e-3 / lambda_max;
    if (controls.max_step > 0.0) limits.h_max = controls.max_step;

    Trajectory traj;
    const auto grid = detail::output_grid(t_end, controls.output_dt);
    traj.t.reserve(grid.size());
    traj.states.reserve(grid.size());
    traj.intensity.reserve(grid.size());

    ode::Vec<6> y = detail::pack(s0);
    ode::StepperState st;
    bool warned = false;
    traj.push(grid.front(), s0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        try {
            ode::advance(stepper, y, grid[k - 1], grid[k], tol, limits, st);
        } catch (const ode::StepFailure& e) {
            const MeanFieldState last = traj.states.back();
            if (e.kind() == ode::StepFailure::Kind::budget)
                throw StepBudgetExceeded("step budget exceeded at t = " + std::to_string(grid[k - 1]) +
                                             " us; use the slow-manifold integrator",
                                         grid[k - 1], last);
            throw IntegrationError(std::string("full integration failed: ") + e.what(), grid[k - 1], last);
        }
        detail::enforce_positivity(y[4], y[5], n_pop, controls.positivity_epsilon, traj.warnings, warned);
        traj.push(grid[k], detail::unpack(y));
    }
    traj.steps = st.accepted;
    return traj;
}

/// Two-timescale integration: (a, M) follow their quasi-steady values while
/// (N_g, N_e) advance with an L-stable Rosenbrock step. Any (a, M) in s0 is
/// replaced by the quasi-steady solution.
inline Trajectory integrate_slow(const PhysicalParams& params, const MeanFieldState& s0, double t_end,
                                 const IntegratorControls& controls = {})
{
    params.validate();
    detail::check_span(t_end, controls);

    Trajectory traj;
    if (!params.is_dispersive())
        traj.warnings.emplace_back("dispersive guard violated: |delta_A| < 5 gamma");

    const double n_pop = std::max(s0.population(), 0.0);
    auto rhs = [&params, frozen = controls.freeze_populations](const ode::Vec<2>& y) -> ode::Vec<2> {
        if (frozen) return {0.0, 0.0};
        return detail::slow_rhs(params, y);
    };
    ode::Ros2<2, decltype(rhs)> stepper(rhs);

    const ode::Tolerances tol{controls.rtol, controls.atol};
    ode::StepLimits limits;
    limits.max_steps = controls.max_steps;
    limits.h_initial = 1e-3 / (2.0 * (params.gamma + params.Gamma));
    if (controls.max_step > 0.0) limits.h_max = controls.max_step;

    const auto grid = detail::output_grid(t_end, controls.output_dt);
    traj.t.reserve(grid.size());
    traj.states.reserve(grid.size());
    traj.intensity.reserve(grid.size());

    ode::Vec<2> y{std::max(s0.N_g, 0.0), std::max(s0.N_e, 0.0)};
    ode::StepperState st;
    bool warned = false;
    traj.push(grid.front(), detail::slow_state(params, y[0], y[1]));
    for (std::size_t k = 1; k < grid.size(); ++k) {
        try {
            ode::advance(stepper, y, grid[k - 1], grid[k], tol, limits, st);
        } catch (const ode::StepFailure& e) {
            throw IntegrationError(std::string("slow integration failed: ") + e.what(), grid[k - 1],
                                   traj.states.back());
        } catch (const NumericalError& e) {
            throw IntegrationError(e.what(), grid[k - 1], traj.states.back());
        }
        detail::enforce_positivity(y[0], y[1], n_pop, controls.positivity_epsilon, traj.warnings, warned);
        traj.push(grid[k], detail::slow_state(params, y[0], y[1]));
    }
    traj.steps = st.accepted;
    return traj;
}

/// Default controls for long slow-manifold runs.
inline IntegratorControls slow_controls(double output_dt = 500.0)
{
    IntegratorControls c;
    c.rtol = 1e-7;
    c.atol = 1e-7;
    c.output_dt = output_dt;
    return c;
}

/// Dispersive-limit estimate of the time at which the transmission reaches a
/// given fraction of the empty-cavity level, starting from full blockade with
/// delta_C = 0. Used only to size simulation windows.
inline double estimated_crossing_time(const PhysicalParams& p, double fraction)
{
    const double ge = p.effective_coupling();
    const double gt = p.gamma + p.Gamma;
    const double loss = 2.0 * p.Gamma * ge * ge / (p.delta_A * p.delta_A + gt * gt) * p.empty_cavity_photons();
    if (!(loss > 0.0) || p.delta_A == 0.0) return std::numeric_limits<double>::infinity();
    const double delta = p.g * p.g / p.delta_A;
    auto potential = [](double u) { return std::log(u) + 0.5 * u * u; };
    const double u0 = std::abs(0.5 * p.n_atoms_total * delta - p.delta_C) / p.kappa;
    const double u = std::sqrt(std::max(1.0 / fraction - 1.0, 0.0));
    if (u0 <= u || u <= 0.0) return 0.0;
    return (potential(u0) - potential(u)) / loss;
}

} // namespace blockade
