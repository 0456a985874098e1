#pragma once

#include <numbers>

// CODATA 2018 recommended values, SI units.
namespace pfl::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double elementary_charge = 1.602176634e-19;       // C (exact)
inline constexpr double vacuum_permittivity = 8.8541878128e-12;    // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;      // kg
inline constexpr double boltzmann = 1.380649e-23;                  // J/K (exact)
inline constexpr double reduced_planck = 1.054571817e-34;          // J s

/// 2 sqrt(2 ln 2): Gaussian FWHM per unit sigma.
inline constexpr double fwhm_per_sigma = 2.3548200450309493;

}  // namespace pfl::constants
