#pragma once

#include <numbers>

namespace casilift::constants {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_B = 1.380649e-23;            // J/K
inline constexpr double c = 299792458.0;               // m/s
inline constexpr double e_charge = 1.602176634e-19;    // C
inline constexpr double epsilon_0 = 8.8541878128e-12;  // F/m
inline constexpr double m_e = 9.1093837015e-31;        // kg
inline constexpr double g_standard = 9.80665;          // m/s^2

inline constexpr double pi = std::numbers::pi;
inline constexpr double zeta3 = 1.2020569031595942854;

/// Converts a photon energy in eV to an angular frequency in rad/s.
inline constexpr double eV_to_rad_s = e_charge / hbar;

}  // namespace casilift::constants
