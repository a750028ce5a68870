#pragma once

#include <cmath>
#include <numbers>

// Physical constants (SI) and the default atom parameter set.

namespace dephasim {

inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K
inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Dipole-trap and D-line parameters of the atom carrying the qubit.
// All angular frequencies in rad/s, lengths in m, masses in kg.
struct AtomParams {
  double mass;                   // kg
  double d1_wavelength;          // m (J' = 1/2 line)
  double d2_wavelength;          // m (J' = 3/2 line)
  double linewidth;              // rad/s, natural linewidth of the D2 line
  double hyperfine_splitting;    // rad/s, ground-state clock splitting
  double quad_zeeman_hz_per_t2;  // Hz/T^2, quadratic Zeeman coefficient of the clock states
};

// Cesium-133 defaults. The Zeeman coefficient is 43 mHz/uT^2 expressed in Hz/T^2.
inline AtomParams cesium() {
  return AtomParams{
      .mass = 2.2069e-25,
      .d1_wavelength = 894.6e-9,
      .d2_wavelength = 852.3e-9,
      .linewidth = kTwoPi * 5.22e6,
      .hyperfine_splitting = kTwoPi * 9.192631770e9,
      .quad_zeeman_hz_per_t2 = 4.3e10,
  };
}

}  // namespace dephasim
