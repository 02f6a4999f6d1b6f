#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/transition.hpp"

namespace blockade {

/// y = amplitude * x^exponent, fitted as a straight line in log-log space.
struct PowerLawFit {
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double amplitude = 0.0;
    double log_amplitude = 0.0;
    std::size_t n_points = 0;
    std::size_t excluded_points = 0;
    std::vector<double> log_residuals;
};

inline PowerLawFit power_law_fit(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw ParameterError("power-law fit: x and y differ in length");
    if (x.size() < 3) throw ParameterError("power-law fit needs at least three points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])))
            throw ParameterError("power-law fit: non-positive point at index " + std::to_string(i));

    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    if (!(sxx > 1e-24 * n)) throw ParameterError("power-law fit: degenerate abscissas");

    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.log_amplitude = my - fit.exponent * mx;
    fit.amplitude = std::exp(fit.log_amplitude);
    fit.n_points = x.size();
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::log(y[i]) - (fit.log_amplitude + fit.exponent * std::log(x[i]));
        fit.log_residuals.push_back(r);
        ssr += r * r;
    }
    fit.exponent_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
    return fit;
}

/// Result of a bounded 1-D minimization.
struct Minimum {
    double x = 0.0;
    double value = 0.0;
    std::vector<std::pair<double, double>> profile; ///< every (x, f(x)) evaluated
};

/// Minimizer converged onto an end of its interval: no bracketed minimum.
class BracketError : public NumericalError {
public:
    BracketError(const std::string& msg, std::vector<std::pair<double, double>> profile)
        : NumericalError(msg), profile_(std::move(profile)) {}
    const std::vector<std::pair<double, double>>& profile() const noexcept { return profile_; }

private:
    std::vector<std::pair<double, double>> profile_;
};

/// Golden-section search for a minimum of f on [lo, hi], in log(x) when
/// `logarithmic`. Stops when the bracket is narrower than rel_tol (relative
/// in x). Throws if the minimum sits on an end of the interval.
inline Minimum golden_section(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
                              bool logarithmic = true)
{
    if (!(lo > 0.0 || !logarithmic) || !(hi > lo)) throw ParameterError("invalid search interval");
    constexpr double inv_phi = 0.6180339887498949;
    auto to_x = [&](double u) { return logarithmic ? std::exp(u) : u; };
    double a = logarithmic ? std::log(lo) : lo;
    double b = logarithmic ? std::log(hi) : hi;
    const double tol = logarithmic ? rel_tol : rel_tol * std::max(std::abs(lo), std::abs(hi));

    Minimum m;
    auto eval = [&](double u) {
        const double x = to_x(u);
        const double v = f(x);
        m.profile.emplace_back(x, v);
        return v;
    };

    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    const double u = fc <= fd ? c : d;
    m.x = to_x(u);
    m.value = std::min(fc, fd);

    const double lo_u = logarithmic ? std::log(lo) : lo;
    const double hi_u = logarithmic ? std::log(hi) : hi;
    if (u - lo_u < 2.0 * tol || hi_u - u < 2.0 * tol) {
        std::sort(m.profile.begin(), m.profile.end());
        std::string msg = "no interior minimum in the search interval; residual profile:";
        for (auto [x, v] : m.profile) msg += " (" + std::to_string(x) + ", " + std::to_string(v) + ")";
        throw BracketError(msg, m.profile);
    }
    return m;
}

struct GammaFitOptions {
    IntegratorControls controls = slow_controls();
    double rel_tol = 1e-3;
    int max_extensions = 8; ///< window doublings allowed while searching for a transition
};

struct GammaFit {
    double Gamma = 0.0;
    double residual = 0.0;        ///< ((s_fit - s_ref) / s_ref)^2
    double reference_slope = 0.0; ///< photons/us at the 50 % crossing
    double fitted_slope = 0.0;
    std::vector<std::pair<double, double>> profile;
};

/// Simulates a slow-manifold trace on the reference's output grid, doubling
/// the window until the 90 % level is reached. Returns nullopt if it never is.
inline std::optional<IntensityTrace> simulate_transition(const PhysicalParams& params, double t_end,
                                                         const IntegratorControls& controls, int max_extensions)
{
    for (int ext = 0; ext <= max_extensions; ++ext) {
        const Trajectory tr = integrate_slow(params, MeanFieldState::vacuum(params.n_atoms_total), t_end, controls);
        IntensityTrace trace = trace_from(tr, params.empty_cavity_photons());
        if (transition_report(trace).has_transition()) return trace;
        t_end *= 2.0;
    }
    return std::nullopt;
}

/// Midpoint slope of the slow-manifold trace for a given escape rate.
inline double simulated_midpoint_slope(const PhysicalParams& params, double t_end, const GammaFitOptions& opt)
{
    const auto trace = simulate_transition(params, t_end, opt.controls, opt.max_extensions);
    if (!trace) return 0.0;
    return midpoint_slope(*trace).value_or(0.0);
}

/// Finds the escape rate Gamma whose simulated transition reproduces the
/// reference's slope at the 50 % crossing. The search runs over
/// [Gamma_lo, Gamma_hi] in log space.
inline GammaFit fit_gamma(const IntensityTrace& reference, const PhysicalParams& params, double Gamma_lo,
                          double Gamma_hi, GammaFitOptions opt = {})
{
    params.validate();
    const auto ref_slope = midpoint_slope(reference);
    if (!ref_slope || !(*ref_slope > 0.0)) throw ParameterError("reference trace has no transition");
    if (!(Gamma_lo > 0.0 && Gamma_hi > Gamma_lo)) throw ParameterError("invalid Gamma search interval");

    opt.controls.output_dt = reference.dt();
    const double t_end = std::max(reference.t.back() - std::min(reference.t.front(), 0.0), reference.dt());

    auto objective = [&](double Gamma) {
        const double s = simulated_midpoint_slope(params.with_escape(Gamma), t_end, opt);
        const double r = (s - *ref_slope) / *ref_slope;
        return r * r;
    };

    GammaFit fit;
    fit.reference_slope = *ref_slope;
    try {
        const Minimum m = golden_section(objective, Gamma_lo, Gamma_hi, opt.rel_tol, true);
        fit.Gamma = m.x;
        fit.residual = m.value;
        fit.profile = m.profile;
    } catch (const BracketError& e) {
        throw BracketError(std::string("Gamma fit: ") + e.what(), e.profile());
    }
    fit.fitted_slope = simulated_midpoint_slope(params.with_escape(fit.Gamma), t_end, opt);
    return fit;
}

} // namespace blockade
