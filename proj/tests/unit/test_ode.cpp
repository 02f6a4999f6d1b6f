#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "blockade/ode.hpp"

using namespace blockade::ode;

namespace {

template <class Stepper, std::size_t N>
Vec<N> run(Stepper& s, Vec<N> y, double t1, Tolerances tol, StepperState* out = nullptr)
{
    StepLimits limits;
    StepperState st;
    advance(s, y, 0.0, t1, tol, limits, st);
    if (out) *out = st;
    return y;
}

} // namespace

TEST(DormandPrince, ExponentialDecay)
{
    auto rhs = [](const Vec<1>& y) { return Vec<1>{-y[0]}; };
    DormandPrince45<1, decltype(rhs)> dp(rhs);
    const auto y = run(dp, Vec<1>{1.0}, 5.0, {1e-10, 1e-12});
    EXPECT_NEAR(y[0], std::exp(-5.0), 1e-10);
}

TEST(DormandPrince, HarmonicOscillatorOverTenPeriods)
{
    auto rhs = [](const Vec<2>& y) { return Vec<2>{y[1], -y[0]}; };
    DormandPrince45<2, decltype(rhs)> dp(rhs);
    const double t = 20.0 * std::numbers::pi;
    const auto y = run(dp, Vec<2>{1.0, 0.0}, t, {1e-10, 1e-12});
    EXPECT_NEAR(y[0], 1.0, 1e-7);
    EXPECT_NEAR(y[1], 0.0, 1e-7);
}

TEST(DormandPrince, ErrorShrinksWithTolerance)
{
    auto rhs = [](const Vec<1>& y) { return Vec<1>{y[0] * std::cos(y[0])}; };
    DormandPrince45<1, decltype(rhs)> dp(rhs);
    const auto ref = run(dp, Vec<1>{0.5}, 10.0, {1e-13, 1e-14});
    const double loose = std::abs(run(dp, Vec<1>{0.5}, 10.0, {1e-5, 1e-7})[0] - ref[0]);
    const double tight = std::abs(run(dp, Vec<1>{0.5}, 10.0, {1e-9, 1e-11})[0] - ref[0]);
    EXPECT_LT(tight, loose);
    EXPECT_LT(tight, 1e-7);
}

TEST(Ros2, StiffRelaxationOntoSlowForcing)
{
    // y' = -k (y - cos t); y -> cos t + (sin t)/k + O(1/k^2) once transients die
    const double k = 1e5;
    // autonomous form with time as a state variable
    auto rhs2 = [k](const Vec<2>& y) { return Vec<2>{-k * (y[0] - std::cos(y[1])), 1.0}; };
    Ros2<2, decltype(rhs2)> ros(rhs2);
    StepperState st;
    const auto y = run(ros, Vec<2>{0.0, 0.0}, 3.0, {1e-6, 1e-8}, &st);
    EXPECT_NEAR(y[1], 3.0, 1e-12);
    EXPECT_NEAR(y[0], std::cos(3.0) + std::sin(3.0) / k, 1e-5);
    // an explicit method would need ~k steps; L-stability keeps this small
    EXPECT_LT(st.accepted, 20'000u);
}

TEST(Ros2, PreservesLinearInvariant)
{
    // y0' = -y0 y1 + y1, y1' = y0 y1 - y1: y0 + y1 is conserved
    auto rhs = [](const Vec<2>& y) { return Vec<2>{-y[0] * y[1] + 0.3 * y[1], y[0] * y[1] - 0.3 * y[1]}; };
    Ros2<2, decltype(rhs)> ros(rhs);
    const auto y = run(ros, Vec<2>{0.9, 0.1}, 50.0, {1e-6, 1e-9});
    EXPECT_NEAR(y[0] + y[1], 1.0, 1e-13);
}

TEST(Ros2, ConvergesOnExponential)
{
    auto rhs = [](const Vec<1>& y) { return Vec<1>{-2.0 * y[0]}; };
    Ros2<1, decltype(rhs)> ros(rhs);
    const auto y = run(ros, Vec<1>{1.0}, 1.0, {1e-9, 1e-12});
    EXPECT_NEAR(y[0], std::exp(-2.0), 1e-7);
}

TEST(Advance, LandsExactlyOnEndpoint)
{
    auto rhs = [](const Vec<2>& y) { return Vec<2>{1.0, y[0]}; };
    DormandPrince45<2, decltype(rhs)> dp(rhs);
    Vec<2> y{0.0, 0.0};
    StepperState st;
    for (int k = 1; k <= 7; ++k) advance(dp, y, 0.1 * (k - 1), 0.1 * k, {1e-10, 1e-12}, {}, st);
    EXPECT_NEAR(y[0], 0.7, 1e-14);
    EXPECT_NEAR(y[1], 0.245, 1e-12);
}

TEST(Advance, StepBudgetIsEnforced)
{
    auto rhs = [](const Vec<1>& y) { return Vec<1>{-y[0]}; };
    DormandPrince45<1, decltype(rhs)> dp(rhs);
    Vec<1> y{1.0};
    StepperState st;
    StepLimits limits;
    limits.max_steps = 5;
    limits.h_max = 1e-3;
    try {
        advance(dp, y, 0.0, 1.0, {1e-8, 1e-10}, limits, st);
        FAIL();
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.kind(), StepFailure::Kind::budget);
    }
}

TEST(Advance, NonFiniteRightHandSideFails)
{
    auto rhs = [](const Vec<1>& y) { return Vec<1>{y[0] > 0.5 ? std::nan("") : 1.0}; };
    DormandPrince45<1, decltype(rhs)> dp(rhs);
    Vec<1> y{0.0};
    StepperState st;
    try {
        advance(dp, y, 0.0, 1.0, {1e-8, 1e-10}, {}, st);
        FAIL();
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.kind(), StepFailure::Kind::non_finite);
    }
}
