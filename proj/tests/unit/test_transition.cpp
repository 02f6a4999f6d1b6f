#include <cmath>

#include <gtest/gtest.h>

#include "blockade/transition.hpp"

using namespace blockade;

namespace {

IntensityTrace make_trace(double dt, std::size_t n, double n_ref, auto f)
{
    IntensityTrace tr;
    tr.n_ref = n_ref;
    for (std::size_t k = 0; k < n; ++k) {
        tr.t.push_back(double(k) * dt);
        tr.n.push_back(f(double(k) * dt));
    }
    return tr;
}

IntensityTrace logistic(double t0, double rate, double dt = 1.0, std::size_t n = 1001)
{
    return make_trace(dt, n, 100.0, [=](double t) { return 100.0 / (1.0 + std::exp(-rate * (t - t0))); });
}

} // namespace

TEST(TransitionReport, LogisticCrossingsByHand)
{
    // logistic: t_f = t0 + ln(f/(1-f)) / rate
    const auto tr = logistic(500.0, 0.05, 0.01, 100'001);
    const auto r = transition_report(tr);
    ASSERT_TRUE(r.has_transition());
    EXPECT_NEAR(*r.t10, 500.0 - std::log(9.0) / 0.05, 1e-3);
    EXPECT_NEAR(*r.t50, 500.0, 1e-3);
    EXPECT_NEAR(*r.t90, 500.0 + std::log(9.0) / 0.05, 1e-3);
    EXPECT_NEAR(*r.width(), 2.0 * std::log(9.0) / 0.05, 2e-3);
}

TEST(TransitionReport, IdealStepWidthWithinOneSample)
{
    const double dt = 10.0;
    const auto tr = make_trace(dt, 101, 1.0, [](double t) { return t >= 500.0 ? 1.0 : 0.0; });
    const auto r = transition_report(tr);
    ASSERT_TRUE(r.has_transition());
    EXPECT_LE(*r.width(), dt);
    EXPECT_NEAR(*r.t50, 500.0, dt);
}

TEST(TransitionReport, ConstantTraceHasNoTransition)
{
    const auto tr = make_trace(1.0, 100, 10.0, [](double) { return 0.5; });
    const auto r = transition_report(tr);
    EXPECT_FALSE(r.has_transition());
    EXPECT_EQ(r.missing, "10%,50%,90%");
}

TEST(TransitionReport, PartialRiseNamesMissingThresholds)
{
    const auto tr = make_trace(1.0, 100, 10.0, [](double t) { return 0.06 * t; });
    const auto r = transition_report(tr);
    EXPECT_TRUE(r.t50.has_value());
    EXPECT_FALSE(r.t90.has_value());
    EXPECT_EQ(r.missing, "90%");
}

TEST(TransitionReport, OrderedCrossingsForMonotoneTraces)
{
    for (double rate : {0.001, 0.01, 0.1, 1.0}) {
        const auto r = transition_report(logistic(400.0, rate));
        if (!r.has_transition()) continue;
        EXPECT_LT(*r.t10, *r.t50);
        EXPECT_LT(*r.t50, *r.t90);
    }
}

TEST(TransitionReport, RejectsNonUniformSampling)
{
    IntensityTrace tr{{0.0, 1.0, 3.0}, {0.0, 0.0, 0.0}, 1.0};
    EXPECT_THROW(transition_report(tr), ParameterError);
}

TEST(MovingAverage, ConstantIsFixedPointAndEdgesShrink)
{
    const std::vector<double> c(20, 3.0);
    for (double v : moving_average(c, 7)) EXPECT_DOUBLE_EQ(v, 3.0);
    const auto r = moving_average({0.0, 1.0, 2.0, 3.0, 4.0}, 3);
    EXPECT_EQ(r, (std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0}));
    const auto s = moving_average({0.0, 0.0, 3.0, 0.0, 0.0}, 3);
    EXPECT_DOUBLE_EQ(s[1], 1.0);
    EXPECT_DOUBLE_EQ(s[0], 0.0);
}

TEST(AlignMidpoints, AllMidpointsAtZero)
{
    std::vector<IntensityTrace> family{logistic(200.0, 0.02), logistic(450.0, 0.05), logistic(700.0, 0.2, 0.5, 2001)};
    const auto aligned = align_midpoints(family);
    ASSERT_EQ(aligned.size(), 3u);
    for (const auto& tr : aligned) {
        const auto r = transition_report(tr);
        ASSERT_TRUE(r.t50);
        EXPECT_NEAR(*r.t50, 0.0, 0.5 * tr.dt());
        EXPECT_NEAR(tr.dt(), 0.5, 1e-12); // common lattice uses the finest spacing
        EXPECT_NEAR(tr.at(0.0), 50.0, 1e-9);
    }
}

TEST(AlignMidpoints, NamesTraceWithoutMidpoint)
{
    std::vector<IntensityTrace> family{logistic(200.0, 0.02),
                                       make_trace(1.0, 10, 100.0, [](double) { return 1.0; })};
    try {
        align_midpoints(family);
        FAIL();
    } catch (const ParameterError& e) {
        EXPECT_NE(std::string(e.what()).find("trace 1"), std::string::npos);
    }
}

TEST(MidpointSlope, LogisticSlopeIsQuarterRateTimesLevel)
{
    const auto tr = logistic(500.0, 0.05, 0.1, 10'001);
    EXPECT_NEAR(*midpoint_slope(tr), 100.0 * 0.05 / 4.0, 1e-4);
    EXPECT_FALSE(midpoint_slope(make_trace(1.0, 5, 1.0, [](double) { return 0.0; })).has_value());
}

TEST(IntensityTrace, InterpolationClampsAtEnds)
{
    const auto tr = make_trace(1.0, 3, 1.0, [](double t) { return 2.0 * t; });
    EXPECT_DOUBLE_EQ(tr.at(-5.0), 0.0);
    EXPECT_DOUBLE_EQ(tr.at(0.25), 0.5);
    EXPECT_DOUBLE_EQ(tr.at(9.0), 4.0);
}
