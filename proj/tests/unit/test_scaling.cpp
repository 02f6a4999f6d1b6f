#include <cmath>

#include <gtest/gtest.h>

#include "blockade/scaling.hpp"

using namespace blockade;

namespace {

StochasticConfig config(std::size_t atoms)
{
    StochasticConfig c;
    c.n_atoms = atoms;
    c.rng_seed = 12;
    return c;
}

} // namespace

TEST(IntegrateNth, AverageAndTrapezoid)
{
    FluctuationSeries f;
    f.t = {0, 1, 2, 3, 4};
    f.n_th = {0, 1, 2, std::nan(""), 4};
    const auto [avg, integral] = detail::integrate_n_th(f, 1.0, 4.0);
    EXPECT_DOUBLE_EQ(avg, (1.0 + 2.0 + 4.0) / 3.0);
    EXPECT_DOUBLE_EQ(integral, 0.5 * (1 + 2) * 1 + 0.5 * (2 + 4) * 2);
}

TEST(ScalingSweep, MeanFieldWidthsDecreaseWithDrive)
{
    SweepOptions opt;
    opt.noise = false;
    opt.controls = slow_controls();
    const auto pts = scaling_sweep(reference_parameters(), {std::sqrt(100.0), std::sqrt(1000.0)}, config(20'000), opt);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_GT(pts[0].width, pts[1].width);
    EXPECT_EQ(pts[0].note, "noise off");
    EXPECT_FALSE(pts[0].included);
    EXPECT_TRUE(std::isnan(pts[0].n_th_integrated));
    EXPECT_NEAR(pts[1].drive, 1000.0, 1e-9);
}

TEST(ScalingSweep, StochasticPointsAreUsable)
{
    SweepOptions opt;
    opt.threads = 2;
    const auto pts = scaling_sweep(reference_parameters(), {std::sqrt(1000.0), std::sqrt(3000.0)}, config(20'000), opt);
    for (const auto& p : pts) {
        EXPECT_TRUE(p.included) << p.note;
        EXPECT_GT(p.width, 0.0);
        EXPECT_GT(p.n_th_integrated, 0.0);
        EXPECT_GT(p.n_th_time_integral, 0.0);
    }
}

TEST(ScalingSweep, NonTransitioningDriveIsFlagged)
{
    SweepOptions opt;
    opt.t_end = 5'000.0; // far too short for any transition
    const auto pts = scaling_sweep(reference_parameters(), {std::sqrt(300.0)}, config(20'000), opt);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_FALSE(pts[0].included);
    EXPECT_NE(pts[0].note.find("no transition"), std::string::npos);
}

TEST(ScalingSweep, SeedReproducible)
{
    SweepOptions opt;
    const auto a = scaling_sweep(reference_parameters(), {std::sqrt(3000.0)}, config(20'000), opt);
    const auto b = scaling_sweep(reference_parameters(), {std::sqrt(3000.0)}, config(20'000), opt);
    EXPECT_EQ(a[0].width, b[0].width);
    EXPECT_EQ(a[0].n_th_integrated, b[0].n_th_integrated);
}

TEST(ScalingSweep, RejectsUnsortedDrives)
{
    EXPECT_THROW(scaling_sweep(reference_parameters(), {3.0, 2.0}, config(100)), ParameterError);
}

TEST(FitScaling, SkipsExcludedPoints)
{
    std::vector<ScalingPoint> pts;
    for (double w : {10.0, 100.0, 1000.0}) {
        ScalingPoint p;
        p.width = w;
        p.n_th_integrated = std::pow(w, -2.0);
        p.included = true;
        pts.push_back(p);
    }
    pts.push_back({});
    const auto fit = fit_scaling(pts);
    EXPECT_NEAR(fit.exponent, -2.0, 1e-12);
    EXPECT_EQ(fit.n_points, 3u);
    EXPECT_EQ(fit.excluded_points, 1u);
}
