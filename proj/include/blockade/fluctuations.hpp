#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/stochastic.hpp"

// Photon-statistics estimators for a displaced thermal state: a Gaussian
// mixture of coherent states around amplitude beta with width n_th. Its
// zero-delay intensity correlation is
//     g2 = 2 - |beta|^4 / (n_th + |beta|^2)^2,
// and with <n> = n_th + |beta|^2 this inverts to
//     n_th = <n> (1 - sqrt(2 - g2)).

namespace blockade {

/// g2(0) of a displaced thermal state.
inline double g2_displaced_thermal(double beta_sq, double n_th)
{
    const double total = n_th + beta_sq;
    if (total <= 0.0) return 2.0; // vacuum limit of the thermal branch
    return 2.0 - beta_sq * beta_sq / (total * total);
}

/// Thermal photon number from the mean photon number and g2 in [1, 2].
inline double thermal_photons(double mean_n, double g2)
{
    const double g2c = std::clamp(g2, 1.0, 2.0);
    return mean_n * (1.0 - std::sqrt(2.0 - g2c));
}

struct FluctuationOptions {
    std::size_t stride_bins = 1;
    std::size_t min_bins = 10;
    /// If positive, a warning is recorded when the bin time exceeds 1/kappa,
    /// i.e. fast cavity-field fluctuations are averaged within a bin.
    double kappa = 0.0;
};

/// Windowed photon statistics. Missing values (windows with zero counts) are NaN.
struct FluctuationSeries {
    std::vector<double> t;        ///< window centres, us
    std::vector<double> mean_n;   ///< photons
    std::vector<double> g2_raw;   ///< shot-noise-corrected estimate, unclamped
    std::vector<double> g2;       ///< clamped to [1, 2]
    std::vector<double> n_th;     ///< photons
    std::size_t window_bins = 0;
    std::vector<std::string> warnings;

    std::size_t size() const { return t.size(); }
};

/// Sliding-window mean and shot-noise-corrected g2 = 1 + (v - mu)/mu^2 of
/// the counts, converted to photon numbers with the record's calibration.
/// Sums are kept in exact integer arithmetic.
inline FluctuationSeries fluctuations(const CountRecord& record, double window, const FluctuationOptions& opt = {})
{
    if (!(record.bin_time > 0.0)) throw ParameterError("count record bin time must be positive");
    if (opt.stride_bins < 1) throw ParameterError("stride must be at least one bin");
    const auto w = static_cast<std::size_t>(std::llround(window / record.bin_time));
    if (w < std::max<std::size_t>(opt.min_bins, 2))
        throw ParameterError("analysis window shorter than the minimum of " + std::to_string(opt.min_bins) + " bins");

    FluctuationSeries out;
    out.window_bins = w;
    if (opt.kappa > 0.0 && record.bin_time * opt.kappa > 1.0)
        out.warnings.emplace_back("bin time exceeds the cavity correlation time 1/kappa");
    const std::size_t n = record.size();
    if (n < w) return out;

    __extension__ using u128 = unsigned __int128;
    std::uint64_t s1 = 0;
    u128 s2 = 0;
    auto add = [&](std::uint32_t c) {
        s1 += c;
        s2 += static_cast<u128>(c) * c;
    };
    auto remove = [&](std::uint32_t c) {
        s1 -= c;
        s2 -= static_cast<u128>(c) * c;
    };
    for (std::size_t i = 0; i < w; ++i) add(record.counts[i]);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto wd = static_cast<double>(w);
    for (std::size_t start = 0;;) {
        const double mu = static_cast<double>(s1) / wd;
        // (w S2 - S1^2) is exact in 128-bit arithmetic
        const u128 num = static_cast<u128>(w) * s2 - static_cast<u128>(s1) * s1;
        const double var = static_cast<double>(num) / (wd * (wd - 1.0));

        out.t.push_back(record.t[start] + 0.5 * wd * record.bin_time);
        if (s1 == 0) {
            out.mean_n.push_back(0.0);
            out.g2_raw.push_back(nan);
            out.g2.push_back(nan);
            out.n_th.push_back(nan);
        } else {
            const double g2_raw = 1.0 + (var - mu) / (mu * mu);
            const double mean_n = mu * record.calibration;
            out.mean_n.push_back(mean_n);
            out.g2_raw.push_back(g2_raw);
            out.g2.push_back(std::clamp(g2_raw, 1.0, 2.0));
            out.n_th.push_back(thermal_photons(mean_n, g2_raw));
        }

        const std::size_t next = start + opt.stride_bins;
        if (next + w > n) break;
        if (opt.stride_bins >= w) {
            s1 = 0;
            s2 = 0;
            for (std::size_t i = next; i < next + w; ++i) add(record.counts[i]);
        } else {
            for (std::size_t i = start; i < next; ++i) remove(record.counts[i]);
            for (std::size_t i = start + w; i < next + w; ++i) add(record.counts[i]);
        }
        start = next;
    }
    return out;
}

/// Standard error of the shot-noise-corrected g2 estimator for a Poisson
/// stream of mean mu counts per bin over m bins: sqrt(2/m)/mu.
inline double poisson_g2_stderr(double mu, std::size_t bins)
{
    return std::sqrt(2.0 / static_cast<double>(bins)) / mu;
}

} // namespace blockade
