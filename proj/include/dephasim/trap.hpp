#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dephasim/constants.hpp"

// Standing-wave dipole trap parameters and the thermal ensemble of trapped
// atoms. Energies and trap depths are expressed in kelvin (E / k_B);
// differential light shifts are angular frequencies (rad/s).

namespace dephasim {

// The differential light shift between the clock states scales the trapping
// potential by eta = omega_hfs / |Delta_eff|. The default eta is the quoted
// value for a 1064 nm cesium trap; effective_detuning and hyperfine_splitting
// are kept so custom traps can derive their own ratio.
struct TrapConfig {
  double depth_kelvin;                        // U0 > 0, in K
  double eta;                                 // dimensionless scaling factor
  double effective_detuning;                  // rad/s, < 0 for red detuning
  double hyperfine_splitting;                 // rad/s
  double laser_wavelength;                    // m
  std::optional<double> relative_intensity;   // I / I0, optional

  static TrapConfig cesium(double depth_kelvin);
};

inline constexpr double kEtaCesium1064 = 1.45e-4;

// eta from the trap detunings; |omega_hfs / delta_eff|.
double eta_from_detunings(double hyperfine_splitting, double effective_detuning);

// Two-level light-shift depth |U0| in kelvin from the relative intensity:
// U0 = hbar*Gamma/8 * (I/I0) * (Gamma/Delta).
double trap_depth_from_intensity(const TrapConfig& trap, const AtomParams& atom = cesium());

// Maximum differential light shift (trap bottom), hbar*delta0 = -eta*U0, so
// delta0 < 0. depth_kelvin in K, result in rad/s.
double delta0_max(double depth_kelvin, double eta);
double depth_from_delta0(double delta0, double eta);  // inverse mapping, K

// 3D thermal energy distribution p(E) = E^2 / (2 (kB T)^3) * exp(-E / kB T),
// with E and T in kelvin (density in 1/K).
double boltzmann_pdf(double energy, double temperature);

// Time-averaged light shift of an atom with total energy E (virial theorem
// halves the potential part): delta_ls = delta0 + eta * kB * E / (2 hbar).
double delta_ls_of_energy(double energy, double delta0, double eta);

// Distribution of delta_ls over the thermal ensemble. k_time = 2 hbar / (eta kB T)
// sets both the width of the distribution and the dephasing time scale.
struct LightShiftDistribution {
  double delta0;  // rad/s
  double k_time;  // s

  static LightShiftDistribution from(double delta0, double eta, double temperature);
  double mode() const { return delta0 + 2.0 / k_time; }
};

// Push-forward of the Boltzmann distribution:
// pdf(d) = K^3/2 * (d - delta0)^2 * exp(-K (d - delta0)) for d >= delta0.
double lightshift_pdf(double delta_ls, const LightShiftDistribution& dist);
double lightshift_cdf(double delta_ls, const LightShiftDistribution& dist);

struct EnsembleSpec {
  double temperature;                        // K
  int atom_count;
  std::optional<double> truncation_energy;   // K; rejection-sample below this
  std::uint64_t rng_seed = 0;
};

// Deterministic per-atom RNG stream seeds; results do not depend on how atoms
// are partitioned across workers.
std::uint64_t atom_stream_seed(std::uint64_t base_seed, std::uint64_t atom_index);

// Gamma(3) energy sample (three exponential draws) in kelvin, truncated by
// rejection if a bound is set.
double sample_energy(std::uint64_t stream_seed, double temperature,
                     std::optional<double> truncation_energy);

// Energies (kelvin) for the whole ensemble, one independent stream per atom.
std::vector<double> sample_ensemble(const EnsembleSpec& ens);

// Ensemble dephasing time T2* = sqrt(e^(2/3) - 1) * 2 hbar / (eta kB T):
// the 1/e decay time of the inhomogeneous fringe envelope.
double t2star_from_temperature(double temperature, double eta);
double temperature_from_t2star(double t2star, double eta);

// The harmonic/virial treatment assumes kB T well below the trap depth.
bool virial_regime_ok(double temperature, double depth_kelvin);

}  // namespace dephasim
