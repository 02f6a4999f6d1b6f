#pragma once

#include <cmath>
#include <string>

#include "blockade/errors.hpp"
#include "blockade/units.hpp"

namespace blockade {

/// Which coupling constant enters the mean-field equations.
///
/// `ensemble_average` uses g/sqrt(2), the rms of g|f(r)| over atoms spread
/// uniformly along a standing wave. With it the quasi-steady cavity field is
/// exactly the dispersive Lorentzian with N = (N_g - N_e)/2. `peak` uses g
/// itself and is kept for sensitivity studies.
enum class CouplingConvention { ensemble_average, peak };

/// Rates, detunings and couplings of the driven atom-cavity system, in rad/us.
struct PhysicalParams {
    double kappa = 0.0;         ///< cavity field decay (HWHM)
    double gamma = 0.0;         ///< atomic dipole decay (HWHM)
    double Gamma = 0.0;         ///< escape rate into states dark to the cavity
    double g = 0.0;             ///< single-photon Rabi coupling at the mode peak
    double delta_A = 0.0;       ///< drive minus atomic resonance
    double delta_C = 0.0;       ///< drive minus cavity resonance
    double eta = 0.0;           ///< coherent drive amplitude
    double n_atoms_total = 0.0; ///< atoms participating in the mean-field model
    CouplingConvention coupling = CouplingConvention::ensemble_average;

    void validate() const
    {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ParameterError(what);
        };
        require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
        require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
        require(std::isfinite(Gamma) && Gamma >= 0.0, "Gamma must be non-negative");
        require(std::isfinite(g) && g >= 0.0, "g must be non-negative");
        require(std::isfinite(eta) && eta >= 0.0, "eta must be non-negative");
        require(std::isfinite(n_atoms_total) && n_atoms_total >= 0.0,
                "n_atoms_total must be non-negative");
        require(std::isfinite(delta_A) && std::isfinite(delta_C), "detunings must be finite");
    }

    /// Coupling constant used in the mean-field equations.
    double effective_coupling() const
    {
        return coupling == CouplingConvention::ensemble_average ? g / std::sqrt(2.0) : g;
    }

    /// Dispersive-regime check |delta_A| >= ratio * gamma. Violations are
    /// warnings, not errors.
    bool is_dispersive(double ratio = 5.0) const { return std::abs(delta_A) >= ratio * gamma; }

    /// Empty-cavity resonant photon number (eta/kappa)^2.
    double empty_cavity_photons() const { return (eta / kappa) * (eta / kappa); }

    double eta_over_kappa() const { return eta / kappa; }

    PhysicalParams with_drive(double eta_over_kappa_value) const
    {
        PhysicalParams p = *this;
        p.eta = eta_over_kappa_value * kappa;
        return p;
    }

    PhysicalParams with_escape(double Gamma_value) const
    {
        PhysicalParams p = *this;
        p.Gamma = Gamma_value;
        return p;
    }
};

/// Gaussian standing-wave mode.
struct ModeGeometry {
    double waist = 0.0;      ///< um
    double wavenumber = 0.0; ///< 1/um

    static ModeGeometry from_wavelength(double waist_um, double wavelength_nm)
    {
        return {waist_um, units::two_pi / units::um_from_nm(wavelength_nm)};
    }

    void validate() const
    {
        if (!(std::isfinite(waist) && waist > 0.0)) throw ParameterError("mode waist must be positive");
        if (!(std::isfinite(wavenumber) && wavenumber > 0.0))
            throw ParameterError("mode wavenumber must be positive");
    }
};

/// Default configuration: the experimental parameters of the 87Rb cavity setup.
/// gamma is the conventional D2 HWHM (2pi x 3.03 MHz); the mean-field atom number
/// 2e4 corresponds to an effective, mode-weighted N = (N_g - N_e)/2 = 1e4.
namespace defaults {
inline constexpr double kappa_mhz = 3.22;
inline constexpr double gamma_mhz = 3.03;
inline constexpr double Gamma_over_gamma = 0.93e-3;
inline constexpr double g_mhz = 0.33;
inline constexpr double delta_A_mhz = -35.0;
inline constexpr double delta_C_mhz = 0.0;
inline constexpr double eta_over_kappa = 17.320508075688775; // (eta/kappa)^2 = 300 photons
inline constexpr double n_atoms = 2.0e4;
inline constexpr double waist_um = 127.0;
inline constexpr double wavelength_nm = 780.241;
} // namespace defaults

inline PhysicalParams reference_parameters()
{
    PhysicalParams p;
    p.kappa = units::angular_from_mhz(defaults::kappa_mhz);
    p.gamma = units::angular_from_mhz(defaults::gamma_mhz);
    p.Gamma = defaults::Gamma_over_gamma * p.gamma;
    p.g = units::angular_from_mhz(defaults::g_mhz);
    p.delta_A = units::angular_from_mhz(defaults::delta_A_mhz);
    p.delta_C = units::angular_from_mhz(defaults::delta_C_mhz);
    p.eta = defaults::eta_over_kappa * p.kappa;
    p.n_atoms_total = defaults::n_atoms;
    return p;
}

inline ModeGeometry reference_geometry()
{
    return ModeGeometry::from_wavelength(defaults::waist_um, defaults::wavelength_nm);
}

} // namespace blockade
