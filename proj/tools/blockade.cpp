// blockade: batch command-line front end.
//
//   blockade simulate  --mode meanfield-slow|meanfield-full|stochastic
//   blockade sweep     --drives 10,30,100,...
//   blockade analyze   --trace a.csv --counts b.csv [--align]
//   blockade fit-gamma --reference ref.csv
//
// Exit codes: 0 success (including "no transition"), 1 usage or
// configuration error, 2 numerical failure. Every run writes manifest.txt to
// the output directory, also when it fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blockade/config.hpp"
#include "blockade/csv_io.hpp"
#include "blockade/fitting.hpp"
#include "blockade/fluctuations.hpp"
#include "blockade/manifest.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/scaling.hpp"
#include "blockade/stochastic.hpp"
#include "blockade/transition.hpp"

namespace fs = std::filesystem;
using namespace blockade;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_numerical = 2;

constexpr double experimental_exponent = -1.9;
constexpr double experimental_exponent_err = 0.1;
constexpr double fallback_t_end_us = 300'000.0;

struct Context {
    RunSettings settings;
    fs::path out_dir;
    RunManifest manifest;
    std::vector<std::string> config_inputs; ///< run.input entries of the config file

    std::ofstream create(const std::string& name)
    {
        const fs::path p = out_dir / name;
        auto f = csv::open_output(p);
        manifest.outputs.push_back(p.string());
        return f;
    }
};

void print_warnings(const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

/// Simulation length: the setting if given, else long enough to pass the
/// estimated 90 % crossing with margin, and at least 300 ms.
double resolve_t_end(const RunSettings& s, const PhysicalParams& p)
{
    if (s.t_end_us > 0.0) return s.t_end_us;
    double t = fallback_t_end_us;
    const double est = estimated_crossing_time(p, 0.9);
    if (std::isfinite(est)) t = std::max(t, 1.3 * est + 2.0 * s.window_us);
    return std::ceil(t / s.output_dt_us) * s.output_dt_us;
}

double resolve_n_ref(const RunSettings& s)
{
    return s.n_ref > 0.0 ? s.n_ref : s.eta_over_kappa * s.eta_over_kappa;
}

std::size_t samples_for(double span_us, double dt)
{
    return dt > 0.0 ? static_cast<std::size_t>(std::llround(span_us / dt)) : 0;
}

int cmd_simulate(Context& ctx)
{
    const RunSettings& s = ctx.settings;
    const PhysicalParams p = s.physical();
    const double t_end = resolve_t_end(s, p);
    ctx.manifest.extra.emplace_back("t_end_resolved_us", format_double(t_end));
    const IntegratorControls controls = s.controls();

    Trajectory tr;
    std::optional<CountRecord> counts;
    if (s.mode == "meanfield-full") {
        tr = integrate_full(p, MeanFieldState::vacuum(p.n_atoms_total), t_end, controls);
    } else if (s.mode == "meanfield-slow") {
        tr = integrate_slow(p, MeanFieldState::vacuum(p.n_atoms_total), t_end, controls);
    } else {
        StochasticRun run = simulate_trajectory(p, s.stochastic(), t_end, controls);
        tr = std::move(run.trajectory);
        counts = std::move(run.counts);
    }
    print_warnings(tr.warnings);

    {
        auto f = ctx.create("trajectory.csv");
        write_trajectory(f, tr);
    }
    if (counts) {
        {
            auto f = ctx.create("counts.csv");
            write_counts(f, *counts);
        }
        auto f = ctx.create("counts.meta");
        write_counts_meta(f, *counts);
    }

    const auto rep = transition_report(trace_from(tr, p.empty_cavity_photons() > 0 ? p.empty_cavity_photons() : 1.0));
    std::cout << "simulate: " << tr.size() << " samples to t = " << t_end << " us, " << tr.steps << " steps\n";
    if (rep.has_transition())
        std::cout << "  t10 = " << *rep.t10 << " us, t50 = " << *rep.t50 << " us, t90 = " << *rep.t90 << " us\n";
    else
        std::cout << "  no transition within the window (missing " << rep.missing << ")\n";
    return exit_ok;
}

int cmd_sweep(Context& ctx)
{
    const RunSettings& s = ctx.settings;
    if (s.drives.empty()) throw InputError("drives", "no drives given (use --drives or the `drives` key)");
    std::vector<double> photons = s.drives;
    std::sort(photons.begin(), photons.end());
    std::vector<double> eta_over_kappa;
    for (double d : photons) eta_over_kappa.push_back(std::sqrt(d));

    SweepOptions opt;
    opt.noise = s.noise;
    opt.window = s.window_us;
    opt.t_end = s.t_end_us;
    opt.controls = s.noise ? stochastic_controls() : slow_controls();
    if (s.rtol > 0.0) opt.controls.rtol = s.rtol;
    if (s.atol > 0.0) opt.controls.atol = s.atol;
    opt.threads = s.threads;

    const auto points = scaling_sweep(s.physical(), eta_over_kappa, s.stochastic(), opt);
    {
        auto f = ctx.create("scaling.csv");
        write_scaling(f, points);
    }
    {
        auto f = ctx.create("scaling_detail.csv");
        write_scaling_detail(f, points);
    }

    std::size_t usable = 0;
    for (const auto& pt : points) {
        if (pt.included) ++usable;
        else std::cerr << "notice: drive " << pt.drive << " excluded: " << pt.note << '\n';
    }

    auto f = ctx.create("fit.txt");
    if (usable < 3) {
        f << "fit = skipped\n"
          << "reason = " << usable << " usable point(s); a power-law fit needs at least 3\n"
          << "n_points = " << usable << '\n'
          << "excluded_points = " << points.size() - usable << '\n';
        std::cout << "sweep: " << points.size() << " point(s), fit skipped (" << usable << " usable)\n";
        return exit_ok;
    }
    const PowerLawFit fit = fit_scaling(points);
    write_fit_report(f, fit);
    f << "comparison_exponent = " << format_double(experimental_exponent) << '\n'
      << "comparison_exponent_stderr = " << format_double(experimental_exponent_err) << '\n';
    std::cout << "sweep: exponent " << fit.exponent << " +- " << fit.exponent_stderr << " over " << fit.n_points
              << " points (experiment: " << experimental_exponent << " +- " << experimental_exponent_err << ")\n";
    return exit_ok;
}

std::vector<std::string> resolve_inputs(const Context& ctx, const std::vector<std::string>& given)
{
    if (!given.empty()) return given;
    return ctx.config_inputs;
}

int cmd_analyze(Context& ctx, const std::vector<std::string>& given)
{
    const RunSettings& s = ctx.settings;
    const auto inputs = resolve_inputs(ctx, given);
    if (inputs.empty()) throw InputError("input", "no input files given (use --trace or --counts)");
    const double n_ref = resolve_n_ref(s);
    if (!(n_ref > 0.0)) throw InputError("n_ref", "reference level must be positive (set --n-ref)");
    ctx.manifest.extra.emplace_back("n_ref_resolved", format_double(n_ref));

    std::vector<IntensityTrace> traces;
    std::vector<std::size_t> smoothing;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const std::string& path = inputs[i];
        ctx.manifest.inputs.push_back(path);
        IntensityTrace tr = read_trace(path, n_ref);
        tr.validate();
        const std::size_t sm = samples_for(s.smoothing_us, tr.dt());
        const TransitionReport rep = transition_report(tr, sm);
        {
            auto f = ctx.create("transition_" + std::to_string(i) + ".txt");
            f << "input = " << path << '\n';
            write_transition_report(f, rep, n_ref);
        }
        std::cout << path << ": ";
        if (rep.has_transition())
            std::cout << "t10 = " << *rep.t10 << " us, t50 = " << *rep.t50 << " us, t90 = " << *rep.t90
                      << " us, width = " << *rep.width() << " us\n";
        else
            std::cout << "no transition (missing " << rep.missing << ")\n";

        std::ifstream probe(path);
        std::string header;
        std::getline(probe, header);
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header == csv::counts_header) {
            const CountRecord rec = read_counts(path);
            FluctuationOptions fo;
            fo.kappa = s.physical().kappa;
            const FluctuationSeries fl = fluctuations(rec, s.window_us, fo);
            print_warnings(fl.warnings);
            auto f = ctx.create("fluctuations_" + std::to_string(i) + ".csv");
            write_fluctuations(f, fl);
        }
        traces.push_back(std::move(tr));
        smoothing.push_back(sm);
    }

    if (s.align) {
        const std::size_t sm = *std::max_element(smoothing.begin(), smoothing.end());
        const auto aligned = align_midpoints(traces, sm);
        for (std::size_t i = 0; i < aligned.size(); ++i) {
            auto f = ctx.create("aligned_" + std::to_string(i) + ".csv");
            write_trace(f, aligned[i]);
        }
    }
    return exit_ok;
}

int cmd_fit_gamma(Context& ctx, const std::vector<std::string>& given)
{
    const RunSettings& s = ctx.settings;
    const auto inputs = resolve_inputs(ctx, given);
    if (inputs.size() != 1) throw InputError("reference", "exactly one reference trace is required");
    ctx.manifest.inputs.push_back(inputs.front());
    const double n_ref = resolve_n_ref(s);
    const IntensityTrace ref = read_trace(inputs.front(), n_ref);
    ref.validate();

    const PhysicalParams p = s.physical();
    GammaFitOptions opt;
    opt.rel_tol = s.fit_rel_tol;
    if (s.rtol > 0.0) opt.controls.rtol = s.rtol;
    if (s.atol > 0.0) opt.controls.atol = s.atol;
    const GammaFit fit = fit_gamma(ref, p, s.gamma_lo_over_gamma * p.gamma, s.gamma_hi_over_gamma * p.gamma, opt);

    auto f = ctx.create("fit_gamma.txt");
    f << "Gamma_over_gamma = " << format_double(fit.Gamma / p.gamma) << '\n'
      << "Gamma_mhz = " << format_double(units::mhz_from_angular(fit.Gamma)) << '\n'
      << "residual = " << format_double(fit.residual) << '\n'
      << "reference_slope = " << format_double(fit.reference_slope) << '\n'
      << "fitted_slope = " << format_double(fit.fitted_slope) << '\n'
      << "search_lo_over_gamma = " << format_double(s.gamma_lo_over_gamma) << '\n'
      << "search_hi_over_gamma = " << format_double(s.gamma_hi_over_gamma) << '\n'
      << "evaluations = " << fit.profile.size() << '\n';
    std::cout << "fit-gamma: Gamma/gamma = " << fit.Gamma / p.gamma << " (residual " << fit.residual << ")\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Transmission-blockade breakdown: simulation and analysis"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand
    app.set_version_flag("--version", tool_version);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "parameter file (key = value; frequencies in MHz)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "master random seed");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_option("--set", overrides, "override any parameter key: --set key=value (repeatable)");

    // Per-command flags are stored as text and applied through RunSettings::set,
    // so they follow the same validation as file keys.
    std::vector<std::pair<std::string, std::string>> flag_values;
    auto keyed = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&flag_values, key](const std::string& v) { flag_values.emplace_back(key, v); }, help);
    };

    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    keyed(sim, "--mode", "mode", "meanfield-slow, meanfield-full or stochastic");
    keyed(sim, "--t-end-us", "t_end_us", "simulated time, us (0 = automatic)");
    keyed(sim, "--eta-over-kappa", "eta_over_kappa", "drive amplitude eta/kappa");
    keyed(sim, "--output-dt-us", "output_dt_us", "output sample spacing, us");

    auto* sweep = app.add_subcommand("sweep", "finite-size scaling sweep over drives");
    keyed(sweep, "--drives", "drives", "comma-separated (eta/kappa)^2 values, photons");
    keyed(sweep, "--noise", "noise", "true: stochastic runs, false: mean-field widths only");
    keyed(sweep, "--window-us", "window_us", "fluctuation window, us");

    std::vector<std::string> analyze_inputs;
    bool align_flag = false;
    auto* analyze = app.add_subcommand("analyze", "transition times, fluctuations, alignment");
    analyze->add_option("--trace", analyze_inputs, "trajectory or count CSV (repeatable)");
    analyze->add_option("--counts", analyze_inputs, "count CSV with .meta sidecar (repeatable)");
    analyze->add_flag("--align", align_flag, "write traces shifted to a common 50 % crossing");
    keyed(analyze, "--n-ref", "n_ref", "reference level, photons (0 = (eta/kappa)^2)");
    keyed(analyze, "--window-us", "window_us", "fluctuation window, us");
    keyed(analyze, "--smoothing-us", "smoothing_us", "moving average before threshold crossings, us");

    std::vector<std::string> reference;
    auto* fitg = app.add_subcommand("fit-gamma", "fit the escape rate to a reference transition");
    fitg->add_option("--reference", reference, "reference trajectory or count CSV");
    keyed(fitg, "--gamma-lo", "gamma_lo_over_gamma", "lower end of the search, in units of gamma (1e-5)");
    keyed(fitg, "--gamma-hi", "gamma_hi_over_gamma", "upper end of the search, in units of gamma (1e-1)");
    keyed(fitg, "--n-ref", "n_ref", "reference level, photons (0 = (eta/kappa)^2)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    CLI::App* active = app.get_subcommands().front();
    Context ctx;
    ctx.out_dir = out_dir;
    ctx.manifest.command = active->get_name();
    ctx.manifest.argv.assign(argv, argv + argc);

    const auto start = std::chrono::steady_clock::now();
    int code = exit_ok;
    try {
        fs::create_directories(ctx.out_dir);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: cannot create output directory: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if (!config_path.empty()) {
            const KeyValueFile kv = read_key_values(config_path);
            ctx.settings.apply(kv);
            for (const auto& e : kv.entries)
                if (e.key == "run.input") ctx.config_inputs.push_back(e.value);
            ctx.manifest.extra.emplace_back("config", config_path);
        }
        for (const auto& [k, v] : flag_values) ctx.settings.set(k, v);
        if (align_flag) ctx.settings.align = true;
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw InputError(o, "--set expects key=value");
            ctx.settings.set(std::string(detail::trim(o.substr(0, eq))), std::string(detail::trim(o.substr(eq + 1))));
        }
        if (seed) ctx.settings.seed = *seed;
        if (threads) ctx.settings.threads = *threads;
        ctx.settings.validate();
        ctx.manifest.settings = ctx.settings;

        if (active == sim) code = cmd_simulate(ctx);
        else if (active == sweep) code = cmd_sweep(ctx);
        else if (active == analyze) code = cmd_analyze(ctx, analyze_inputs);
        else code = cmd_fit_gamma(ctx, reference);
    } catch (const IntegrationError& e) {
        const auto& s = e.last_state();
        std::cerr << "error: " << e.what() << "\n  last valid state at t = " << e.time() << " us: a = " << s.a
                  << ", M = " << s.M << ", N_g = " << s.N_g << ", N_e = " << s.N_e << '\n';
        ctx.manifest.message = std::string(e.what()) + " (last valid state at t = " + format_double(e.time()) + " us)";
        code = exit_numerical;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        ctx.manifest.message = e.what();
        code = exit_numerical;
    } catch (const std::exception& e) {
        // InputError, ParameterError, ModelError: the inputs are at fault
        std::cerr << "error: " << e.what() << '\n';
        ctx.manifest.message = e.what();
        code = exit_usage;
    }

    ctx.manifest.settings = ctx.settings;
    ctx.manifest.exit_code = code;
    ctx.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.manifest.write(ctx.out_dir / "manifest.txt");
    return code;
}
