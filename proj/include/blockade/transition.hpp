#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/stochastic.hpp"

namespace blockade {

/// Uniformly sampled intracavity photon number with its empty-cavity
/// reference level (eta/kappa)^2.
struct IntensityTrace {
    std::vector<double> t; ///< us, uniform spacing
    std::vector<double> n; ///< photons
    double n_ref = 1.0;

    std::size_t size() const { return t.size(); }
    double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }

    void validate() const
    {
        if (t.size() != n.size()) throw ParameterError("trace time and value columns differ in length");
        if (t.size() < 2) throw ParameterError("trace needs at least two samples");
        if (!(n_ref > 0.0)) throw ParameterError("trace reference level must be positive");
        const double h = dt();
        if (!(h > 0.0)) throw ParameterError("trace times must be strictly increasing");
        for (std::size_t k = 1; k < t.size(); ++k)
            if (std::abs((t[k] - t[k - 1]) - h) > 1e-6 * h) throw ParameterError("trace is not uniformly sampled");
        for (double v : n)
            if (!(v >= 0.0)) throw ParameterError("trace photon numbers must be non-negative");
    }

    /// Linear interpolation, clamped to the end values outside the trace.
    double at(double time) const
    {
        const double x = (time - t.front()) / dt();
        if (x <= 0.0) return n.front();
        const auto last = static_cast<double>(n.size() - 1);
        if (x >= last) return n.back();
        const auto i = static_cast<std::size_t>(x);
        const double f = x - static_cast<double>(i);
        return n[i] + f * (n[i + 1] - n[i]);
    }
};

/// Photon-number trace of a trajectory. A final sample closer than one output
/// interval (a span that is not a whole number of intervals) is dropped.
inline IntensityTrace trace_from(const Trajectory& traj, double n_ref)
{
    IntensityTrace tr{traj.t, traj.intensity, n_ref};
    const std::size_t n = tr.t.size();
    if (n > 2 && (tr.t[n - 1] - tr.t[n - 2]) < (1.0 - 1e-6) * (tr.t[1] - tr.t[0])) {
        tr.t.pop_back();
        tr.n.pop_back();
    }
    return tr;
}

/// Photon-number trace from detector counts, via the record's calibration.
inline IntensityTrace trace_from(const CountRecord& rec, double n_ref)
{
    IntensityTrace tr;
    tr.t = rec.t;
    tr.n.reserve(rec.size());
    for (auto c : rec.counts) tr.n.push_back(static_cast<double>(c) * rec.calibration);
    tr.n_ref = n_ref;
    return tr;
}

/// Centered moving average over `width` samples (rounded up to odd); the
/// window shrinks symmetrically at the ends.
inline std::vector<double> moving_average(const std::vector<double>& x, std::size_t width)
{
    if (width <= 1 || x.empty()) return x;
    const std::size_t half = width / 2;
    std::vector<double> prefix(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t h = std::min({half, i, x.size() - 1 - i});
        out[i] = (prefix[i + h + 1] - prefix[i - h]) / static_cast<double>(2 * h + 1);
    }
    return out;
}

/// First-crossing times of 10/50/90 % of n_ref.
struct TransitionReport {
    std::optional<double> t10, t50, t90;
    std::size_t smoothing = 0; ///< moving-average width applied, in samples
    std::string missing;       ///< names the thresholds never crossed

    bool has_transition() const { return t10 && t50 && t90; }
    std::optional<double> width() const
    {
        if (!has_transition()) return std::nullopt;
        return *t90 - *t10;
    }
};

/// First time the trace reaches `level`, linearly interpolated within the
/// sample interval where it first does.
inline std::optional<double> first_crossing(const std::vector<double>& t, const std::vector<double>& n, double level)
{
    if (n.empty()) return std::nullopt;
    if (n.front() >= level) return t.front();
    for (std::size_t k = 1; k < n.size(); ++k) {
        if (n[k] >= level) {
            const double f = (level - n[k - 1]) / (n[k] - n[k - 1]);
            return t[k - 1] + f * (t[k] - t[k - 1]);
        }
    }
    return std::nullopt;
}

inline TransitionReport transition_report(const IntensityTrace& trace, std::size_t smoothing = 0)
{
    trace.validate();
    const std::vector<double> n = smoothing > 1 ? moving_average(trace.n, smoothing) : trace.n;

    TransitionReport r;
    r.smoothing = smoothing > 1 ? 2 * (smoothing / 2) + 1 : 0;
    r.t10 = first_crossing(trace.t, n, 0.1 * trace.n_ref);
    r.t50 = first_crossing(trace.t, n, 0.5 * trace.n_ref);
    r.t90 = first_crossing(trace.t, n, 0.9 * trace.n_ref);
    for (auto [v, name] : {std::pair{&r.t10, "10%"}, {&r.t50, "50%"}, {&r.t90, "90%"}}) {
        if (!*v) r.missing += (r.missing.empty() ? "" : ",") + std::string(name);
    }
    return r;
}

/// Shifts every trace so its 50 % crossing sits at t = 0 and resamples it onto
/// the common lattice k * dt (dt of the finest input).
inline std::vector<IntensityTrace> align_midpoints(const std::vector<IntensityTrace>& traces, std::size_t smoothing = 0)
{
    if (traces.empty()) return {};
    double dt = std::numeric_limits<double>::infinity();
    std::vector<double> mids;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto rep = transition_report(traces[i], smoothing);
        if (!rep.t50) throw ParameterError("trace " + std::to_string(i) + " has no midpoint crossing");
        mids.push_back(*rep.t50);
        dt = std::min(dt, traces[i].dt());
    }

    std::vector<IntensityTrace> out;
    out.reserve(traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& tr = traces[i];
        const auto k0 = static_cast<long long>(std::ceil((tr.t.front() - mids[i]) / dt - 1e-9));
        const auto k1 = static_cast<long long>(std::floor((tr.t.back() - mids[i]) / dt + 1e-9));
        IntensityTrace shifted;
        shifted.n_ref = tr.n_ref;
        for (long long k = k0; k <= k1; ++k) {
            const double tk = static_cast<double>(k) * dt;
            shifted.t.push_back(tk);
            shifted.n.push_back(tr.at(tk + mids[i]));
        }
        out.push_back(std::move(shifted));
    }
    return out;
}

/// Slope of the trace at its 50 % crossing, central difference over +-1 sample.
inline std::optional<double> midpoint_slope(const IntensityTrace& trace, std::size_t smoothing = 0)
{
    const auto rep = transition_report(trace, smoothing);
    if (!rep.t50) return std::nullopt;
    IntensityTrace used = trace;
    if (smoothing > 1) used.n = moving_average(trace.n, smoothing);
    const double h = used.dt();
    return (used.at(*rep.t50 + h) - used.at(*rep.t50 - h)) / (2.0 * h);
}

} // namespace blockade
