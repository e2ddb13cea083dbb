#pragma once

#include <numbers>

// Single authority for physical constants and unit conversions.
// Internal convention everywhere in this library:
//   time in ns, angular frequencies and rates in rad/ns.
// Inputs quoted as f = rate/2pi (GHz) or as energies (meV) are converted
// at the configuration boundary and never mixed inside the dynamics.

namespace qdcav {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA: hbar = 6.582119569e-16 eV s, h = 4.135667696e-15 eV s
inline constexpr double hbar_mev_ns = 6.582119569e-4;   // meV ns
inline constexpr double planck_mev_s = 4.135667696e-12;  // meV s

inline constexpr double mev_to_rad_per_ns(double e_mev) { return e_mev / hbar_mev_ns; }
inline constexpr double rad_per_ns_to_mev(double w) { return w * hbar_mev_ns; }

// rates quoted as rate/2pi in GHz; 1 GHz = 1 cycle/ns
inline constexpr double ghz_to_rad_per_ns(double f_ghz) { return two_pi * f_ghz; }
inline constexpr double rad_per_ns_to_ghz(double w) { return w / two_pi; }

inline constexpr double ps_to_ns(double t_ps) { return 1e-3 * t_ps; }
inline constexpr double ns_to_ps(double t_ns) { return 1e3 * t_ns; }

// photon energy (meV) <-> frequency (GHz): f = E/h
inline constexpr double mev_to_ghz(double e_mev) { return e_mev / planck_mev_s * 1e-9; }

// cavity field decay rate from a loaded quality factor
inline constexpr double kappa_from_q(double energy_mev, double q) {
  return mev_to_rad_per_ns(energy_mev) / q;
}

}  // namespace qdcav
