#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blockade/config.hpp"
#include "blockade/errors.hpp"
#include "blockade/fitting.hpp"
#include "blockade/fluctuations.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/scaling.hpp"
#include "blockade/stochastic.hpp"
#include "blockade/transition.hpp"

// Plain-text data files. Numbers are written in shortest round-trip form,
// so identical results give byte-identical files. NaN is written as `nan`.

namespace blockade {

namespace csv {

inline constexpr std::string_view trajectory_header = "t_us,re_a,im_a,re_M,im_M,N_g,N_e,photons";
inline constexpr std::string_view counts_header = "t_us,counts";
inline constexpr std::string_view fluctuation_header = "t_us,mean_n,g2_raw,g2_clamped,n_th";
inline constexpr std::string_view scaling_header = "drive_photons,width_us,n_th_integrated";

inline std::string num(double v) { return std::isnan(v) ? "nan" : format_double(v); }

/// Numeric table read from a CSV file with a known header.
struct Table {
    std::vector<std::vector<double>> rows;
};

/// Reads a CSV whose first line must equal `header`. Every later non-empty
/// line must hold the same number of numeric fields; errors name the line.
inline Table read_table(std::istream& in, std::string_view header, const std::string& source)
{
    std::size_t columns = 1;
    for (char c : header) columns += c == ',';

    std::string line;
    if (!std::getline(in, line)) throw InputError(source + " line 1", "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
        throw InputError(source + " line 1", "expected header `" + std::string(header) + "`, got `" + line + "`");

    Table t;
    for (std::size_t no = 2; std::getline(in, line); ++no) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const std::string where = source + " line " + std::to_string(no);
        std::vector<double> row;
        std::string_view rest = line;
        while (true) {
            const auto comma = rest.find(',');
            const auto field = detail::trim(rest.substr(0, comma));
            if (field == "nan") {
                row.push_back(std::nan(""));
            } else {
                double v = 0.0;
                const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
                if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
                    throw InputError(where, "malformed number `" + std::string(field) + "`");
                row.push_back(v);
            }
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (row.size() != columns)
            throw InputError(where, "expected " + std::to_string(columns) + " fields, got " +
                                        std::to_string(row.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError(path, "cannot open file");
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(path.string(), "cannot write file");
    return out;
}

} // namespace csv

inline void write_trajectory(std::ostream& out, const Trajectory& tr)
{
    using csv::num;
    out << csv::trajectory_header << '\n';
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const auto& s = tr.states[k];
        out << num(tr.t[k]) << ',' << num(s.a.real()) << ',' << num(s.a.imag()) << ',' << num(s.M.real()) << ','
            << num(s.M.imag()) << ',' << num(s.N_g) << ',' << num(s.N_e) << ',' << num(tr.intensity[k]) << '\n';
    }
}

inline Trajectory read_trajectory(std::istream& in, const std::string& source = "trajectory")
{
    const auto table = csv::read_table(in, csv::trajectory_header, source);
    Trajectory tr;
    for (const auto& r : table.rows) {
        MeanFieldState s{{r[1], r[2]}, {r[3], r[4]}, r[5], r[6]};
        tr.t.push_back(r[0]);
        tr.states.push_back(s);
        tr.intensity.push_back(r[7]);
    }
    return tr;
}

inline void write_counts(std::ostream& out, const CountRecord& rec)
{
    out << csv::counts_header << '\n';
    for (std::size_t k = 0; k < rec.size(); ++k) out << csv::num(rec.t[k]) << ',' << rec.counts[k] << '\n';
}

/// Sidecar metadata of a count record (`<basename>.meta`).
inline void write_counts_meta(std::ostream& out, const CountRecord& rec)
{
    out << "seed = " << rec.seed << '\n'
        << "detector_efficiency = " << format_double(rec.detector_efficiency) << '\n'
        << "bin_time_us = " << format_double(rec.bin_time) << '\n'
        << "calibration = " << format_double(rec.calibration) << '\n';
}

inline std::filesystem::path meta_path(const std::filesystem::path& counts_path)
{
    auto p = counts_path;
    p.replace_extension(".meta");
    return p;
}

/// Reads a count CSV and its `.meta` sidecar. The sidecar is required: it
/// carries the calibration from counts to photons.
inline CountRecord read_counts(const std::string& path)
{
    auto in = csv::open_input(path);
    const auto table = csv::read_table(in, csv::counts_header, path);
    CountRecord rec;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const double c = table.rows[i][1];
        if (!(c >= 0.0 && c <= 4.0e9 && c == std::floor(c)))
            throw InputError(path + " line " + std::to_string(i + 2), "counts must be non-negative integers");
        rec.t.push_back(table.rows[i][0]);
        rec.counts.push_back(static_cast<std::uint32_t>(c));
    }

    const auto meta = meta_path(path).string();
    const auto kv = read_key_values(meta);
    auto need = [&](const char* key) -> const std::string& {
        const auto* e = kv.find(key);
        if (!e) throw InputError(meta, std::string("missing key `") + key + "`");
        return e->value;
    };
    rec.seed = parse_u64(need("seed"), "seed");
    rec.detector_efficiency = parse_double(need("detector_efficiency"), "detector_efficiency");
    rec.bin_time = parse_double(need("bin_time_us"), "bin_time_us");
    rec.calibration = parse_double(need("calibration"), "calibration");
    if (!(rec.bin_time > 0.0 && rec.calibration > 0.0)) throw InputError(meta, "bin time and calibration must be positive");
    return rec;
}

inline void write_fluctuations(std::ostream& out, const FluctuationSeries& f)
{
    using csv::num;
    out << csv::fluctuation_header << '\n';
    for (std::size_t k = 0; k < f.size(); ++k)
        out << num(f.t[k]) << ',' << num(f.mean_n[k]) << ',' << num(f.g2_raw[k]) << ',' << num(f.g2[k]) << ','
            << num(f.n_th[k]) << '\n';
}

/// Rows for every point, flagged or not. NaN marks a missing value.
inline void write_scaling(std::ostream& out, const std::vector<ScalingPoint>& points)
{
    using csv::num;
    out << csv::scaling_header << '\n';
    const double nan = std::nan("");
    for (const auto& p : points) {
        const bool has_width = p.width > 0.0;
        out << num(p.drive) << ',' << num(has_width ? p.width : nan) << ',' << num(p.n_th_integrated) << '\n';
    }
}

/// Both normalizations of the integrated n_th plus the inclusion flag and note.
inline void write_scaling_detail(std::ostream& out, const std::vector<ScalingPoint>& points)
{
    using csv::num;
    out << "drive_photons,width_us,n_th_time_average,n_th_time_integral,included,note\n";
    for (const auto& p : points)
        out << num(p.drive) << ',' << num(p.width) << ',' << num(p.n_th_integrated) << ','
            << num(p.n_th_time_integral) << ',' << (p.included ? 1 : 0) << ',' << p.note << '\n';
}

inline void write_fit_report(std::ostream& out, const PowerLawFit& fit)
{
    out << "exponent = " << format_double(fit.exponent) << '\n'
        << "exponent_stderr = " << format_double(fit.exponent_stderr) << '\n'
        << "amplitude = " << format_double(fit.amplitude) << '\n'
        << "n_points = " << fit.n_points << '\n'
        << "excluded_points = " << fit.excluded_points << '\n';
}

inline void write_transition_report(std::ostream& out, const TransitionReport& r, double n_ref)
{
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); };
    out << "transition = " << (r.has_transition() ? "yes" : "no") << '\n'
        << "n_ref = " << format_double(n_ref) << '\n'
        << "t10_us = " << opt(r.t10) << '\n'
        << "t50_us = " << opt(r.t50) << '\n'
        << "t90_us = " << opt(r.t90) << '\n'
        << "width_us = " << opt(r.width()) << '\n'
        << "smoothing_samples = " << r.smoothing << '\n';
    if (!r.missing.empty()) out << "missing = " << r.missing << '\n';
}

/// Intensity trace from either a trajectory CSV (photons column) or a count
/// CSV with its sidecar, chosen by the header line.
inline IntensityTrace read_trace(const std::string& path, double n_ref)
{
    std::string first;
    {
        auto in = csv::open_input(path);
        std::getline(in, first);
        if (!first.empty() && first.back() == '\r') first.pop_back();
    }
    if (first == csv::counts_header) return trace_from(read_counts(path), n_ref);
    auto in = csv::open_input(path);
    return trace_from(read_trajectory(in, path), n_ref);
}

inline void write_trace(std::ostream& out, const IntensityTrace& tr)
{
    out << "t_us,photons\n";
    for (std::size_t k = 0; k < tr.size(); ++k) out << csv::num(tr.t[k]) << ',' << csv::num(tr.n[k]) << '\n';
}

} // namespace blockade
