// One blockade-breakdown transition at the default experimental parameters,
// printed as (time in ms, photons) with the 10/50/90 % crossings.

#include <cstdio>

#include "blockade/meanfield.hpp"
#include "blockade/transition.hpp"

int main()
{
    using namespace blockade;
    const PhysicalParams p = reference_parameters();
    const Trajectory tr = integrate_slow(p, MeanFieldState::vacuum(p.n_atoms_total), 150'000.0, slow_controls(2'000.0));

    for (std::size_t k = 0; k < tr.size(); ++k) std::printf("%8.1f  %10.4f\n", tr.t[k] * 1e-3, tr.intensity[k]);

    const auto rep = transition_report(trace_from(tr, p.empty_cavity_photons()));
    if (rep.has_transition())
        std::printf("t10 = %.2f ms, t50 = %.2f ms, t90 = %.2f ms\n", *rep.t10 * 1e-3, *rep.t50 * 1e-3, *rep.t90 * 1e-3);
}
