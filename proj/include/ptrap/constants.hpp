#pragma once

#include <numbers>

// CODATA 2018 values. Lengths inside the library are micrometres, energies
// electron-volts and potentials volts unless a name says otherwise.
namespace ptrap::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double epsilon0 = 8.8541878128e-12;           // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

inline constexpr double um = 1e-6;      // m per micrometre
inline constexpr double per_um = 1e6;   // (1/m) per (1/um)

// e / (4 pi eps0) expressed in V*um, i.e. the Coulomb energy in eV of two
// unit charges one micrometre apart.
inline constexpr double coulomb_ev_um = elementary_charge / (4.0 * pi * epsilon0) * 1e6;

}  // namespace ptrap::constants
