#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "blockade/errors.hpp"
#include "blockade/params.hpp"

namespace blockade {

using Vec3 = std::array<double, 3>;

/// Atoms in the cavity: static positions plus the ground-minus-excited
/// occupation difference p_j of each atom.
struct AtomEnsemble {
    std::vector<Vec3> positions; ///< um; z along the cavity axis
    std::vector<double> p;       ///< each in [-1, 1]

    std::size_t size() const { return positions.size(); }

    void validate() const
    {
        if (positions.size() != p.size())
            throw ParameterError("ensemble positions and state weights differ in length");
        for (double pj : p)
            if (!(pj >= -1.0 && pj <= 1.0)) throw ParameterError("ensemble state weight outside [-1, 1]");
    }
};

/// |f(r)|^2 of the TEM00 standing wave, cos^2(kz) exp(-2(x^2+y^2)/w^2).
inline double mode_intensity(const ModeGeometry& geometry, const Vec3& r)
{
    const double rho2 = r[0] * r[0] + r[1] * r[1];
    const double c = std::cos(geometry.wavenumber * r[2]);
    return c * c * std::exp(-2.0 * rho2 / (geometry.waist * geometry.waist));
}

/// N = sum_j |f(r_j)|^2 p_j.
inline double effective_atom_number(const AtomEnsemble& ensemble, const ModeGeometry& geometry)
{
    ensemble.validate();
    double n = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j)
        n += mode_intensity(geometry, ensemble.positions[j]) * ensemble.p[j];
    return n;
}

/// Single-atom dispersive cavity shift delta = g^2 / delta_A (sign of delta_A).
inline double dispersive_shift(const PhysicalParams& params)
{
    if (params.delta_A == 0.0) throw ModelError("atomic resonance: dispersive model invalid");
    return params.g * params.g / params.delta_A;
}

/// Transmitted intensity relative to the resonant empty cavity,
/// 1 / (((delta_C - N delta)/kappa)^2 + 1).
inline double lorentzian_transmission(const PhysicalParams& params, double n_effective, double delta)
{
    const double x = (params.delta_C - n_effective * delta) / params.kappa;
    return 1.0 / (x * x + 1.0);
}

/// Sampling recipe for static atom positions.
struct EnsembleSampling {
    std::size_t n_atoms = 0;
    int axial_wavelengths = 1000;     ///< axial extent, in whole wavelengths
    double transverse_ratio = 10.0;   ///< cloud rms radius / waist; 0 puts all atoms on axis
    double p = 1.0;                   ///< initial state weight of every atom
};

/// Draws positions uniformly along z over an integer number of wavelengths and
/// Gaussian in x, y with rms `transverse_ratio * waist`.
template <class Urbg>
AtomEnsemble sample_ensemble(const ModeGeometry& geometry, const EnsembleSampling& how, Urbg& rng)
{
    geometry.validate();
    if (how.axial_wavelengths < 1) throw ParameterError("axial extent must cover at least one wavelength");
    if (!(how.transverse_ratio >= 0.0)) throw ParameterError("transverse ratio must be non-negative");

    const double lambda = units::two_pi / geometry.wavenumber;
    std::uniform_real_distribution<double> axial(0.0, how.axial_wavelengths * lambda);
    std::normal_distribution<double> transverse(0.0, how.transverse_ratio * geometry.waist);

    AtomEnsemble e;
    e.positions.reserve(how.n_atoms);
    for (std::size_t j = 0; j < how.n_atoms; ++j) {
        const double x = how.transverse_ratio > 0.0 ? transverse(rng) : 0.0;
        const double y = how.transverse_ratio > 0.0 ? transverse(rng) : 0.0;
        e.positions.push_back({x, y, axial(rng)});
    }
    e.p.assign(how.n_atoms, how.p);
    e.validate();
    return e;
}

} // namespace blockade
