// Transition widths for drives spanning two decades, aligned on their
// midpoints. Stronger drives switch sooner and faster.

#include <cmath>
#include <cstdio>

#include "blockade/fitting.hpp"
#include "blockade/meanfield.hpp"
#include "blockade/transition.hpp"

int main()
{
    using namespace blockade;
    for (double photons : {10.0, 100.0, 1000.0}) {
        const PhysicalParams p = reference_parameters().with_drive(std::sqrt(photons));
        const double t_end = 1.5 * estimated_crossing_time(p, 0.9);
        const auto trace = simulate_transition(p, t_end, slow_controls(t_end / 2000.0), 4);
        if (!trace) {
            std::printf("(eta/kappa)^2 = %6.0f: no transition\n", photons);
            continue;
        }
        const auto rep = transition_report(*trace);
        std::printf("(eta/kappa)^2 = %6.0f: t50 = %9.2f ms, width = %8.3f ms, slope = %.4g photons/us\n", photons,
                    *rep.t50 * 1e-3, *rep.width() * 1e-3, midpoint_slope(*trace).value_or(0.0));
    }
}
