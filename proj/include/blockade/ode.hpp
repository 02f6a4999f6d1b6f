#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "blockade/errors.hpp"

// Small fixed-size adaptive ODE steppers.
//
// DormandPrince45 is the explicit embedded 5(4) pair used for the full
// equations of motion. Ros2 is the two-stage L-stable Rosenbrock method
// (gamma = 1 + 1/sqrt(2)) with a first-order embedded estimate, used where
// one slow variable is slaved to a fast relaxation.

namespace blockade::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

struct Tolerances {
    double rtol = 1e-8;
    double atol = 1e-10;
};

struct StepLimits {
    double h_initial = 0.0; ///< 0 picks a small fraction of the span
    double h_max = std::numeric_limits<double>::infinity();
    double h_min = 1e-14;
    std::size_t max_steps = 10'000'000;
};

/// Running state of an adaptive integration; carried across calls to
/// `advance` so consecutive output intervals reuse the step size.
struct StepperState {
    double h = 0.0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

class StepFailure : public NumericalError {
public:
    enum class Kind { budget, underflow, non_finite };
    StepFailure(Kind kind, const std::string& msg) : NumericalError(msg), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

template <std::size_t N>
double error_norm(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1, const Tolerances& tol)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double sc = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(N));
}

template <std::size_t N>
bool all_finite(const Vec<N>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Explicit Dormand-Prince 5(4). `Rhs` is callable as Vec<N>(const Vec<N>&).
template <std::size_t N, class Rhs>
class DormandPrince45 {
public:
    static constexpr int error_order = 4;

    explicit DormandPrince45(Rhs rhs) : rhs_(std::move(rhs)) {}

    /// One trial step; writes the 5th-order solution and returns the scaled
    /// error norm.
    double attempt(const Vec<N>& y, double h, Vec<N>& y_out, const Tolerances& tol)
    {
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                         a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                         a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
        constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                         b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                         e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        Vec<N> tmp;
        const Vec<N> k1 = rhs_(y);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        const Vec<N> k2 = rhs_(tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        const Vec<N> k3 = rhs_(tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        const Vec<N> k4 = rhs_(tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        const Vec<N> k5 = rhs_(tmp);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const Vec<N> k6 = rhs_(tmp);
        for (std::size_t i = 0; i < N; ++i)
            y_out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const Vec<N> k7 = rhs_(y_out);

        Vec<N> err;
        for (std::size_t i = 0; i < N; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        return error_norm(err, y, y_out, tol);
    }

private:
    Rhs rhs_;
};

/// Two-stage Rosenbrock method ROS2 with a finite-difference Jacobian.
/// Linear invariants of the right-hand side are preserved up to round-off.
template <std::size_t N, class Rhs>
class Ros2 {
public:
    static constexpr int error_order = 1;

    explicit Ros2(Rhs rhs) : rhs_(std::move(rhs)) {}

    double attempt(const Vec<N>& y, double h, Vec<N>& y_out, const Tolerances& tol)
    {
        constexpr double g = 1.0 + 0.7071067811865476;
        const Vec<N> f0 = rhs_(y);

        std::array<Vec<N>, N> jac{}; // jac[i][j] = d f_i / d y_j
        for (std::size_t j = 0; j < N; ++j) {
            Vec<N> yp = y;
            const double dy = 1.4901161193847656e-08 * std::max(std::abs(y[j]), 1.0);
            yp[j] += dy;
            const Vec<N> fp = rhs_(yp);
            for (std::size_t i = 0; i < N; ++i) jac[i][j] = (fp[i] - f0[i]) / dy;
        }

        // W = I - g h J, factored once per step
        std::array<Vec<N>, N> w{};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) w[i][j] = (i == j ? 1.0 : 0.0) - g * h * jac[i][j];
        Lu lu(w);

        const Vec<N> k1 = lu.solve(f0);
        Vec<N> y1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + h * k1[i];
        const Vec<N> f1 = rhs_(y1);
        Vec<N> rhs2;
        for (std::size_t i = 0; i < N; ++i) rhs2[i] = f1[i] - 2.0 * k1[i];
        const Vec<N> k2 = lu.solve(rhs2);

        Vec<N> err;
        for (std::size_t i = 0; i < N; ++i) {
            y_out[i] = y[i] + h * (1.5 * k1[i] + 0.5 * k2[i]);
            err[i] = 0.5 * h * (k1[i] + k2[i]);
        }
        return error_norm(err, y, y_out, tol);
    }

private:
    // Dense LU with partial pivoting for the small W matrix.
    struct Lu {
        std::array<Vec<N>, N> a;
        std::array<std::size_t, N> perm{};

        explicit Lu(const std::array<Vec<N>, N>& m) : a(m)
        {
            for (std::size_t i = 0; i < N; ++i) perm[i] = i;
            for (std::size_t k = 0; k < N; ++k) {
                std::size_t piv = k;
                for (std::size_t i = k + 1; i < N; ++i)
                    if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
                if (a[piv][k] == 0.0) throw NumericalError("singular Rosenbrock iteration matrix");
                std::swap(a[k], a[piv]);
                std::swap(perm[k], perm[piv]);
                for (std::size_t i = k + 1; i < N; ++i) {
                    a[i][k] /= a[k][k];
                    for (std::size_t j = k + 1; j < N; ++j) a[i][j] -= a[i][k] * a[k][j];
                }
            }
        }

        Vec<N> solve(const Vec<N>& b) const
        {
            Vec<N> x;
            for (std::size_t i = 0; i < N; ++i) {
                double s = b[perm[i]];
                for (std::size_t j = 0; j < i; ++j) s -= a[i][j] * x[j];
                x[i] = s;
            }
            for (std::size_t i = N; i-- > 0;) {
                double s = x[i];
                for (std::size_t j = i + 1; j < N; ++j) s -= a[i][j] * x[j];
                x[i] = s / a[i][i];
            }
            return x;
        }
    };

    Rhs rhs_;
};

/// Advances `y` from t0 to t1 with error control, landing exactly on t1.
/// Step size and counters persist in `state`.
template <class Stepper, std::size_t N>
void advance(Stepper& stepper, Vec<N>& y, double t0, double t1, const Tolerances& tol,
             const StepLimits& limits, StepperState& state)
{
    constexpr double safety = 0.9;
    constexpr double exponent = 1.0 / (Stepper::error_order + 1);

    const double span = t1 - t0;
    if (span <= 0.0) return;
    if (state.h <= 0.0) state.h = limits.h_initial > 0.0 ? limits.h_initial : span * 1e-3;

    double t = t0;
    Vec<N> y_new;
    while (t < t1) {
        if (state.accepted + state.rejected >= limits.max_steps)
            throw StepFailure(StepFailure::Kind::budget, "step budget exhausted");

        double h = std::min({state.h, limits.h_max, t1 - t});
        const bool last = (t + h >= t1) || (t1 - (t + h) < 1e-12 * std::abs(t1));
        if (last) h = t1 - t;

        const double err = stepper.attempt(y, h, y_new, tol);
        if (!std::isfinite(err) || !all_finite(y_new)) {
            ++state.rejected;
            state.h = 0.25 * h;
            if (state.h < limits.h_min)
                throw StepFailure(StepFailure::Kind::non_finite, "non-finite state in integration");
            continue;
        }

        double factor = err == 0.0 ? 5.0 : safety * std::pow(err, -exponent);
        factor = std::clamp(factor, 0.2, 5.0);
        if (err <= 1.0) {
            y = y_new;
            t = last ? t1 : t + h;
            ++state.accepted;
            // a truncated final step says nothing about the natural step size
            if (!last || factor < 1.0) state.h = std::min(h * factor, limits.h_max);
        } else {
            ++state.rejected;
            state.h = h * std::min(factor, 0.9);
            if (state.h < limits.h_min)
                throw StepFailure(StepFailure::Kind::underflow, "step size underflow");
        }
    }
}

} // namespace blockade::ode
