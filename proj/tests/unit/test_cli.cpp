#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "blockade/config.hpp"
#include "blockade/csv_io.hpp"

using namespace blockade;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string err;
};

/// Runs the CLI with `args`, capturing stderr.
Result cli(const std::string& args)
{
    const fs::path err = fs::temp_directory_path() / "blockade_cli_stderr.txt";
    const std::string cmd = std::string(BLOCKADE_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("blockade_cli_" + name);
    fs::remove_all(d);
    return d;
}

std::string value_of(const fs::path& kv_file, const std::string& key)
{
    const auto kv = read_key_values(kv_file.string());
    const auto* e = kv.find(key);
    return e ? e->value : "";
}

} // namespace

TEST(Cli, SimulateDefaultSlowGivesSigmoid)
{
    const auto out = fresh_dir("sim");
    const auto r = cli("simulate --config " BLOCKADE_CONFIG_DIR "/reference.cfg --out " + out.string() +
                       " --t-end-us 300000");
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(out / "trajectory.csv");
    const Trajectory tr = read_trajectory(in);
    ASSERT_EQ(tr.size(), 601u);
    EXPECT_LT(tr.intensity.front(), 0.02 * 300.0);
    EXPECT_GT(tr.intensity.back(), 0.95 * 300.0);
    EXPECT_EQ(value_of(out / "manifest.txt", "run.exit_code"), "0");
    EXPECT_EQ(value_of(out / "manifest.txt", "run.output"), (out / "trajectory.csv").string());

    const auto ana = fresh_dir("sim_analyze");
    ASSERT_EQ(cli("analyze --trace " + (out / "trajectory.csv").string() + " --out " + ana.string()).code, 0);
    const double t10 = std::stod(value_of(ana / "transition_0.txt", "t10_us"));
    const double t50 = std::stod(value_of(ana / "transition_0.txt", "t50_us"));
    const double t90 = std::stod(value_of(ana / "transition_0.txt", "t90_us"));
    EXPECT_LT(t10, t50);
    EXPECT_LT(t50, t90);
}

TEST(Cli, ZeroDriveIsFlat)
{
    const auto out = fresh_dir("zero");
    ASSERT_EQ(cli("simulate --eta-over-kappa 0 --out " + out.string()).code, 0);
    std::ifstream in(out / "trajectory.csv");
    for (double n : read_trajectory(in).intensity) EXPECT_EQ(n, 0.0);
}

TEST(Cli, StochasticSameSeedIsByteIdentical)
{
    const auto a = fresh_dir("stoch_a"), b = fresh_dir("stoch_b");
    const std::string args = "simulate --mode stochastic --seed 77 --t-end-us 20000 --set n_atoms=2000 --out ";
    ASSERT_EQ(cli(args + a.string()).code, 0);
    ASSERT_EQ(cli(args + b.string()).code, 0);
    for (const char* f : {"trajectory.csv", "counts.csv", "counts.meta"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(value_of(a / "counts.meta", "seed"), "77");
}

TEST(Cli, ManifestReproducesRun)
{
    const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
    ASSERT_EQ(cli("simulate --mode stochastic --seed 5 --t-end-us 10000 --set n_atoms=1000 --set dt_jump_us=2 --out " +
                  a.string()).code, 0);
    ASSERT_EQ(cli("simulate --config " + (a / "manifest.txt").string() + " --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "counts.csv"), slurp(b / "counts.csv"));
    EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
}

TEST(Cli, UnknownConfigKeyIsNamed)
{
    const auto out = fresh_dir("badkey");
    fs::create_directories(out);
    std::ofstream(out / "bad.cfg") << "kappa_mhz = 3\nkapa_mhz = 4\n";
    const auto r = cli("simulate --config " + (out / "bad.cfg").string() + " --out " + out.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("kapa_mhz"), std::string::npos) << r.err;
    EXPECT_EQ(value_of(out / "manifest.txt", "run.exit_code"), "1");
}

TEST(Cli, InvalidModeIsUsageError)
{
    const auto r = cli("simulate --mode quantum --out " + fresh_dir("badmode").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("mode"), std::string::npos);
}

TEST(Cli, MissingSubcommandIsUsageError)
{
    EXPECT_EQ(cli("").code, 1);
}

TEST(Cli, OverlongFullIntegrationIsNumericalFailure)
{
    const auto out = fresh_dir("full");
    const auto r = cli("simulate --mode meanfield-full --t-end-us 300000 --out " + out.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("last valid state"), std::string::npos) << r.err;
    EXPECT_EQ(value_of(out / "manifest.txt", "run.exit_code"), "2");
}

TEST(Cli, FullModeShortWindow)
{
    const auto out = fresh_dir("full_short");
    ASSERT_EQ(cli("simulate --mode meanfield-full --t-end-us 100 --output-dt-us 1 --out " + out.string()).code, 0);
    std::ifstream in(out / "trajectory.csv");
    EXPECT_EQ(read_trajectory(in).size(), 101u);
}

TEST(Cli, AnalyzeConstantTraceReportsNoTransition)
{
    const auto out = fresh_dir("const");
    fs::create_directories(out);
    {
        std::ofstream f(out / "flat.csv");
        f << "t_us,re_a,im_a,re_M,im_M,N_g,N_e,photons\n";
        for (int k = 0; k < 10; ++k) f << k << ",1,0,0,0,100,0,1\n";
    }
    const auto r = cli("analyze --trace " + (out / "flat.csv").string() + " --out " + out.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(value_of(out / "transition_0.txt", "transition"), "no");
}

TEST(Cli, AnalyzeMalformedCsvNamesLine)
{
    const auto out = fresh_dir("malformed");
    fs::create_directories(out);
    std::ofstream(out / "bad.csv") << "t_us,re_a,im_a,re_M,im_M,N_g,N_e,photons\n0,0,0,0,0,1,0,0\n1,0,0,0,0\n";
    const auto r = cli("analyze --trace " + (out / "bad.csv").string() + " --out " + out.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, AnalyzeAlignsThreeTraces)
{
    const auto sims = fresh_dir("align_src");
    std::string traces;
    for (int d : {100, 1000, 3000}) {
        const auto dir = sims / std::to_string(d);
        ASSERT_EQ(cli("simulate --set eta_over_kappa=" + std::to_string(std::sqrt(double(d))) +
                      " --output-dt-us 100 --out " + dir.string()).code, 0);
        traces += " --trace " + (dir / "trajectory.csv").string();
    }
    const auto out = fresh_dir("align");
    // a shared reference level that every trace crosses
    ASSERT_EQ(cli("analyze --align --n-ref 50" + traces + " --out " + out.string()).code, 0);
    for (int i = 0; i < 3; ++i) {
        std::ifstream in(out / ("aligned_" + std::to_string(i) + ".csv"));
        std::string line;
        std::getline(in, line);
        EXPECT_EQ(line, "t_us,photons");
        bool has_zero = false;
        while (std::getline(in, line))
            if (line.rfind("0,", 0) == 0) has_zero = true;
        EXPECT_TRUE(has_zero);
    }
}

TEST(Cli, SweepSingleDriveSkipsFit)
{
    const auto out = fresh_dir("sweep1");
    const auto r = cli("sweep --drives 3000 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(out / "scaling.csv");
    std::string header, row, extra;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "drive_photons,width_us,n_th_integrated");
    EXPECT_FALSE(row.empty());
    EXPECT_FALSE(static_cast<bool>(std::getline(in, extra)));
    EXPECT_EQ(value_of(out / "fit.txt", "fit"), "skipped");
}

TEST(Cli, SweepWithoutDrivesIsUsageError)
{
    const auto r = cli("sweep --out " + fresh_dir("sweep0").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("drives"), std::string::npos);
}

TEST(Cli, FitGammaRoundTrip)
{
    const auto ref = fresh_dir("fitg_ref");
    const std::string drive = "--set eta_over_kappa=31.622776601683793";
    ASSERT_EQ(cli("simulate " + drive + " --set Gamma_over_gamma=0.002 --output-dt-us 100 --out " + ref.string()).code, 0);
    const auto out = fresh_dir("fitg");
    const auto r = cli("fit-gamma " + drive + " --reference " + (ref / "trajectory.csv").string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(value_of(out / "fit_gamma.txt", "Gamma_over_gamma")), 0.002, 0.02 * 0.002);
    EXPECT_EQ(value_of(out / "fit_gamma.txt", "search_lo_over_gamma"), "1e-05");
    EXPECT_EQ(value_of(out / "fit_gamma.txt", "search_hi_over_gamma"), "0.1");
}

TEST(Cli, FitGammaWithoutTransitionFails)
{
    const auto ref = fresh_dir("fitg_flat");
    ASSERT_EQ(cli("simulate --t-end-us 5000 --out " + ref.string()).code, 0);
    const auto r = cli("fit-gamma --reference " + (ref / "trajectory.csv").string() + " --out " + ref.string() + "/fit");
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("no transition"), std::string::npos) << r.err;
}
