#pragma once

#include <numbers>

// Unit system used throughout the library:
//   time                 microseconds (us)
//   rates and detunings  angular frequency, rad/us
//   lengths              micrometres (um)
//
// Input files quote frequencies in ordinary MHz (cycles per microsecond).
// The factor 2*pi is applied exactly once, when a value enters the library.

namespace blockade::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// MHz (cycles/us) -> rad/us.
constexpr double angular_from_mhz(double f_mhz) { return two_pi * f_mhz; }

/// rad/us -> MHz.
constexpr double mhz_from_angular(double omega) { return omega / two_pi; }

/// kHz -> rad/us.
constexpr double angular_from_khz(double f_khz) { return two_pi * f_khz * 1e-3; }

constexpr double um_from_nm(double nm) { return nm * 1e-3; }

constexpr double us_from_ms(double ms) { return ms * 1e3; }

} // namespace blockade::units
