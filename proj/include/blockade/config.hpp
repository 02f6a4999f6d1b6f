#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/params.hpp"
#include "blockade/stochastic.hpp"
#include "blockade/units.hpp"

// Parameter files are flat `key = value` text with `#` comments. Frequencies
// are ordinary MHz; the factor 2*pi is applied by RunSettings::physical().
// Keys starting with `run.` are ignored, so a run manifest is itself a valid
// parameter file.

namespace blockade {

/// Ordered key-value entries with the line each came from.
struct KeyValueFile {
    struct Entry {
        std::string key;
        std::string value;
        std::size_t line = 0;
    };
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const
    {
        const Entry* hit = nullptr;
        for (const auto& e : entries)
            if (e.key == key) hit = &e; // last assignment wins
        return hit;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline KeyValueFile parse_key_values(std::istream& in, const std::string& source = "input")
{
    KeyValueFile kv;
    std::string raw;
    for (std::size_t line = 1; std::getline(in, raw); ++line) {
        std::string_view s = raw;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw InputError(source + " line " + std::to_string(line), "expected `key = value`");
        const auto key = detail::trim(s.substr(0, eq));
        if (key.empty()) throw InputError(source + " line " + std::to_string(line), "empty key");
        kv.entries.push_back({std::string(key), std::string(detail::trim(s.substr(eq + 1))), line});
    }
    return kv;
}

inline KeyValueFile read_key_values(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError(path, "cannot open file");
    return parse_key_values(in, path);
}

inline double parse_double(std::string_view text, const std::string& key)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw InputError(key, "expected a finite number, got `" + std::string(text) + "`");
    return v;
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& key)
{
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw InputError(key, "expected a non-negative integer, got `" + std::string(text) + "`");
    return v;
}

/// Comma-separated list of numbers.
inline std::vector<double> parse_list(std::string_view text, const std::string& key)
{
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = detail::trim(text.substr(0, comma));
        if (item.empty()) throw InputError(key, "empty list element");
        out.push_back(parse_double(item, key));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

inline bool parse_bool(std::string_view text, const std::string& key)
{
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw InputError(key, "expected true or false, got `" + std::string(text) + "`");
}

/// Shortest text that reads back as the same double.
inline std::string format_double(double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string format_list(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
}

/// Every user-settable quantity, in file units.
struct RunSettings {
    // physics
    double kappa_mhz = defaults::kappa_mhz;
    double gamma_mhz = defaults::gamma_mhz;
    double Gamma_over_gamma = defaults::Gamma_over_gamma;
    double g_mhz = defaults::g_mhz;
    double delta_A_mhz = defaults::delta_A_mhz;
    double delta_C_mhz = defaults::delta_C_mhz;
    double eta_over_kappa = defaults::eta_over_kappa;
    double n_atoms = defaults::n_atoms;
    double waist_um = defaults::waist_um;
    double wavelength_nm = defaults::wavelength_nm;
    std::string coupling = "ensemble_average";

    // numerics and analysis
    std::string mode = "meanfield-slow";
    double t_end_us = 0.0;      ///< 0: sized automatically
    double output_dt_us = 500.0;
    double rtol = 0.0;          ///< 0: mode default
    double atol = 0.0;          ///< 0: mode default
    double dt_jump_us = 1.0;
    double bin_time_us = 1.0;
    double detector_efficiency = 1.0;
    std::string escape_rule = "proportional";
    double window_us = 500.0;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    // command-specific
    std::vector<double> drives;          ///< sweep: (eta/kappa)^2 per point, photons
    bool noise = true;                   ///< sweep: stochastic (true) or mean-field widths
    double n_ref = 0.0;                  ///< analyze, fit-gamma: reference level; 0 = (eta/kappa)^2
    double smoothing_us = 0.0;           ///< analyze: moving average before the crossings
    bool align = false;                  ///< analyze: emit the common-midpoint family
    double gamma_lo_over_gamma = 1e-5;   ///< fit-gamma search interval
    double gamma_hi_over_gamma = 1e-1;
    double fit_rel_tol = 1e-3;

    PhysicalParams physical() const
    {
        PhysicalParams p;
        p.kappa = units::angular_from_mhz(kappa_mhz);
        p.gamma = units::angular_from_mhz(gamma_mhz);
        p.Gamma = Gamma_over_gamma * p.gamma;
        p.g = units::angular_from_mhz(g_mhz);
        p.delta_A = units::angular_from_mhz(delta_A_mhz);
        p.delta_C = units::angular_from_mhz(delta_C_mhz);
        p.eta = eta_over_kappa * p.kappa;
        p.n_atoms_total = n_atoms;
        p.coupling = coupling == "peak" ? CouplingConvention::peak : CouplingConvention::ensemble_average;
        return p;
    }

    ModeGeometry geometry() const { return ModeGeometry::from_wavelength(waist_um, wavelength_nm); }

    StochasticConfig stochastic() const
    {
        StochasticConfig c;
        c.n_atoms = static_cast<std::size_t>(std::llround(n_atoms));
        c.rng_seed = seed;
        c.dt_jump = dt_jump_us;
        c.bin_time = bin_time_us;
        c.detector_efficiency = detector_efficiency;
        c.escape_rule = escape_rule == "from_excited" ? EscapeRule::from_excited : EscapeRule::proportional;
        return c;
    }

    IntegratorControls controls() const
    {
        IntegratorControls c = mode == "stochastic" ? stochastic_controls(output_dt_us) : slow_controls(output_dt_us);
        if (mode == "meanfield-full") c = IntegratorControls{.output_dt = output_dt_us};
        if (rtol > 0.0) c.rtol = rtol;
        if (atol > 0.0) c.atol = atol;
        return c;
    }

    /// Checks enumerations and ranges; the error names the key.
    void validate() const
    {
        auto need = [](bool ok, const char* key, const char* msg) {
            if (!ok) throw InputError(key, msg);
        };
        need(kappa_mhz > 0.0, "kappa_mhz", "must be positive");
        need(gamma_mhz > 0.0, "gamma_mhz", "must be positive");
        need(Gamma_over_gamma >= 0.0, "Gamma_over_gamma", "must be non-negative");
        need(g_mhz >= 0.0, "g_mhz", "must be non-negative");
        need(eta_over_kappa >= 0.0, "eta_over_kappa", "must be non-negative");
        need(n_atoms >= 0.0, "n_atoms", "must be non-negative");
        need(waist_um > 0.0, "waist_um", "must be positive");
        need(wavelength_nm > 0.0, "wavelength_nm", "must be positive");
        need(coupling == "ensemble_average" || coupling == "peak", "coupling",
             "must be `ensemble_average` or `peak`");
        need(mode == "meanfield-slow" || mode == "meanfield-full" || mode == "stochastic", "mode",
             "must be `meanfield-slow`, `meanfield-full` or `stochastic`");
        need(t_end_us >= 0.0, "t_end_us", "must be non-negative");
        need(output_dt_us > 0.0, "output_dt_us", "must be positive");
        need(rtol >= 0.0, "rtol", "must be non-negative");
        need(atol >= 0.0, "atol", "must be non-negative");
        need(dt_jump_us > 0.0, "dt_jump_us", "must be positive");
        need(bin_time_us > 0.0, "bin_time_us", "must be positive");
        need(detector_efficiency > 0.0 && detector_efficiency <= 1.0, "detector_efficiency", "must lie in (0, 1]");
        need(escape_rule == "proportional" || escape_rule == "from_excited", "escape_rule",
             "must be `proportional` or `from_excited`");
        need(window_us > 0.0, "window_us", "must be positive");
        for (double d : drives) need(d > 0.0, "drives", "must be positive");
        need(n_ref >= 0.0, "n_ref", "must be non-negative");
        need(smoothing_us >= 0.0, "smoothing_us", "must be non-negative");
        need(gamma_lo_over_gamma > 0.0 && gamma_hi_over_gamma > gamma_lo_over_gamma, "gamma_lo_over_gamma",
             "need 0 < gamma_lo_over_gamma < gamma_hi_over_gamma");
        need(fit_rel_tol > 0.0 && fit_rel_tol < 1.0, "fit_rel_tol", "must lie in (0, 1)");
    }

    /// (key, formatted value) pairs in a fixed order; reads back through apply().
    std::vector<std::pair<std::string, std::string>> entries() const
    {
        return {
            {"kappa_mhz", format_double(kappa_mhz)},
            {"gamma_mhz", format_double(gamma_mhz)},
            {"Gamma_over_gamma", format_double(Gamma_over_gamma)},
            {"g_mhz", format_double(g_mhz)},
            {"delta_A_mhz", format_double(delta_A_mhz)},
            {"delta_C_mhz", format_double(delta_C_mhz)},
            {"eta_over_kappa", format_double(eta_over_kappa)},
            {"n_atoms", format_double(n_atoms)},
            {"waist_um", format_double(waist_um)},
            {"wavelength_nm", format_double(wavelength_nm)},
            {"coupling", coupling},
            {"mode", mode},
            {"t_end_us", format_double(t_end_us)},
            {"output_dt_us", format_double(output_dt_us)},
            {"rtol", format_double(rtol)},
            {"atol", format_double(atol)},
            {"dt_jump_us", format_double(dt_jump_us)},
            {"bin_time_us", format_double(bin_time_us)},
            {"detector_efficiency", format_double(detector_efficiency)},
            {"escape_rule", escape_rule},
            {"window_us", format_double(window_us)},
            {"seed", std::to_string(seed)},
            {"threads", std::to_string(threads)},
            {"drives", format_list(drives)},
            {"noise", noise ? "true" : "false"},
            {"n_ref", format_double(n_ref)},
            {"smoothing_us", format_double(smoothing_us)},
            {"align", align ? "true" : "false"},
            {"gamma_lo_over_gamma", format_double(gamma_lo_over_gamma)},
            {"gamma_hi_over_gamma", format_double(gamma_hi_over_gamma)},
            {"fit_rel_tol", format_double(fit_rel_tol)},
        };
    }

    /// Sets one key from its text value. Unknown keys are errors.
    void set(const std::string& key, const std::string& value)
    {
        using Setter = std::function<void(RunSettings&, const std::string&)>;
        auto num = [](double RunSettings::*m) {
            return Setter([m](RunSettings& s, const std::string& v) { s.*m = parse_double(v, ""); });
        };
        auto str = [](std::string RunSettings::*m) {
            return Setter([m](RunSettings& s, const std::string& v) { s.*m = v; });
        };
        auto flag = [](bool RunSettings::*m) {
            return Setter([m](RunSettings& s, const std::string& v) { s.*m = parse_bool(v, ""); });
        };
        static const std::map<std::string, Setter, std::less<>> table = {
            {"kappa_mhz", num(&RunSettings::kappa_mhz)},
            {"gamma_mhz", num(&RunSettings::gamma_mhz)},
            {"Gamma_over_gamma", num(&RunSettings::Gamma_over_gamma)},
            {"g_mhz", num(&RunSettings::g_mhz)},
            {"delta_A_mhz", num(&RunSettings::delta_A_mhz)},
            {"delta_C_mhz", num(&RunSettings::delta_C_mhz)},
            {"eta_over_kappa", num(&RunSettings::eta_over_kappa)},
            {"n_atoms", num(&RunSettings::n_atoms)},
            {"waist_um", num(&RunSettings::waist_um)},
            {"wavelength_nm", num(&RunSettings::wavelength_nm)},
            {"coupling", str(&RunSettings::coupling)},
            {"mode", str(&RunSettings::mode)},
            {"t_end_us", num(&RunSettings::t_end_us)},
            {"output_dt_us", num(&RunSettings::output_dt_us)},
            {"rtol", num(&RunSettings::rtol)},
            {"atol", num(&RunSettings::atol)},
            {"dt_jump_us", num(&RunSettings::dt_jump_us)},
            {"bin_time_us", num(&RunSettings::bin_time_us)},
            {"detector_efficiency", num(&RunSettings::detector_efficiency)},
            {"escape_rule", str(&RunSettings::escape_rule)},
            {"window_us", num(&RunSettings::window_us)},
            {"seed", [](RunSettings& s, const std::string& v) { s.seed = parse_u64(v, ""); }},
            {"threads", [](RunSettings& s, const std::string& v) {
                 s.threads = static_cast<unsigned>(parse_u64(v, ""));
             }},
            {"drives", [](RunSettings& s, const std::string& v) {
                 s.drives = v.empty() ? std::vector<double>{} : parse_list(v, "");
             }},
            {"noise", flag(&RunSettings::noise)},
            {"n_ref", num(&RunSettings::n_ref)},
            {"smoothing_us", num(&RunSettings::smoothing_us)},
            {"align", flag(&RunSettings::align)},
            {"gamma_lo_over_gamma", num(&RunSettings::gamma_lo_over_gamma)},
            {"gamma_hi_over_gamma", num(&RunSettings::gamma_hi_over_gamma)},
            {"fit_rel_tol", num(&RunSettings::fit_rel_tol)},
        };
        const auto it = table.find(key);
        if (it == table.end()) throw InputError(key, "unknown configuration key");
        try {
            it->second(*this, value);
        } catch (const InputError& e) {
            throw InputError(key, e.what());
        }
    }

    /// Applies every entry of a parameter file, skipping `run.` keys.
    void apply(const KeyValueFile& kv)
    {
        for (const auto& e : kv.entries) {
            if (e.key.starts_with("run.")) continue;
            set(e.key, e.value);
        }
    }
};

/// Defaults overlaid by the file at `path`.
inline RunSettings load_settings(const std::string& path)
{
    RunSettings s;
    s.apply(read_key_values(path));
    return s;
}

} // namespace blockade
