#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dephasim/constants.hpp"
#include "dephasim/trap.hpp"

// Irreversible-dephasing budget: Allan statistics of monitor signals and the
// model estimates for heating, photon recoil, magnetic noise, microwave
// jitter and Raman scattering. All sigma values are angular (rad/s) unless
// a /2pi conversion is explicit.

namespace dephasim {

struct TimeSeries {
  double sample_interval;      // s
  std::vector<double> values;  // arbitrary units
};

// Core two-sample deviation on consecutive non-overlapping window means:
// sigma_A^2 = mean((m_{k+1} - m_k)^2) / 2. No normalization.
double allan_deviation_raw(std::span<const double> values, std::size_t samples_per_window);

// Relative Allan deviation of a monitor series: values are first scaled to a
// dataset mean of one, so the result is dimensionless relative fluctuation.
// tau must be an integer multiple of the sample interval.
double allan_deviation(const TimeSeries& series, double tau);

// Detuning fluctuation caused by a relative trap-depth fluctuation sigma_A:
// sigma = sqrt(2) * |delta0| * sigma_A.
double sigma_from_allan(double allan_dev, double delta0);

// Heating at rate Edot mixes a Gaussian detuning drift of width
// (eta/hbar) sqrt(E Edot tau) over the thermal energy distribution in
// `dimension` degrees of freedom. Energies in kelvin.
struct HeatingModel {
  double heating_rate;  // K/s
  double temperature;   // K
  int dimension = 3;
};

// Closed form evaluated at tau_pi = T2'/2:
// sigma = (eta kB / hbar) sqrt(n/2 * Edot * T2' * T).
double heating_sigma(const HeatingModel& model, double t2prime, double eta);

// Same quantity via the numerically integrated Gaussian-mixture variance at a
// given tau_pi; kept as an independent route for cross-checking.
double heating_sigma_mixture(const HeatingModel& model, double tau_pi, double eta);

// Differential-shift diffusion from spontaneous photon recoil:
// sigma = eta k sqrt(3 kB T Gamma_s tau_pi / m) * exp(-Gamma_s tau_pi / 2).
double photon_recoil_sigma(double temperature, double scattering_rate, double tau_pi,
                           double wavelength, double mass, double eta);

// Single-scattering-event limit eta * k * sqrt(3 kB T / m).
double photon_recoil_sigma_single(double temperature, double wavelength, double mass, double eta);

// Quadratic Zeeman shift of the clock transition. quad_coeff in Hz/T^2,
// fields in tesla, results in rad/s.
double zeeman_offset(double b0, double quad_coeff);
// First-order sensitivity to a field fluctuation delta_b around b0:
// delta_omega = 2 * quad_coeff * b0 * delta_b.
double magnetic_shift(double b0, double delta_b, double quad_coeff);

// Detuning fluctuation from line-synchronous field ripple of amplitude
// delta_omega: sqrt(2) * delta_omega * (Allan deviation of a unit sine at
// line_freq, evaluated numerically at averaging time tau).
double magnetic_sigma(double tau, double delta_omega, double line_freq = 50.0);

// Fractional fringe-phase jitter from pulse amplitude/duration noise:
// dphi/2pi = sqrt((dOmega/Omega)^2 + (dtau/tau)^2).
double microwave_jitter(double rel_amplitude, double rel_duration);

// Spin-relaxing Raman fraction of the scattering rate. The two excited
// fine-structure amplitudes nearly cancel, leaving
// beta = |Delta_fs / (3 Delta_{1/2})|^2.
double raman_suppression_beta(double trap_wavelength, const AtomParams& atom = cesium());

// Population lifetime T1 = 1 / (beta * Gamma_s).
double t1_from_scattering(double scattering_rate, double beta);

enum class Provenance { measured, model };

struct NoiseBudgetEntry {
  std::string mechanism;
  double sigma;  // rad/s
  Provenance provenance;
  std::optional<double> reference_sigma;  // rad/s, external value for side-by-side reports
};

struct BudgetInputs {
  std::optional<double> sigma_exp;       // rad/s, measured echo-decay fluctuation
  std::optional<double> t2prime;         // s; defaults to sqrt(2)/sigma_exp

  std::optional<double> intensity_sigma_a;        // relative Allan value at T2'
  std::optional<TimeSeries> intensity_series;     // alternative: compute from series
  std::optional<double> pointing_best_sigma_a;
  std::optional<TimeSeries> pointing_best_series;
  std::optional<double> pointing_worst_sigma_a;
  std::optional<TimeSeries> pointing_worst_series;

  std::optional<HeatingModel> heating;

  struct PhotonRecoil {
    double temperature;      // K
    double scattering_rate;  // 1/s
  };
  std::optional<PhotonRecoil> photon;

  struct Magnetic {
    double b0;         // T
    double delta_b;    // T
    double line_freq;  // Hz
  };
  std::optional<Magnetic> magnetic;

  // Reference sigmas (rad/s) for side-by-side fixture reports, keyed like the entries.
  std::vector<std::pair<std::string, double>> references;
};

struct BudgetReport {
  double t2prime;  // s
  std::vector<NoiseBudgetEntry> entries;
  std::optional<double> total_best;   // rad/s, quadrature sum (best-case pointing)
  std::optional<double> total_worst;  // rad/s
};

BudgetReport budget_report(const TrapConfig& trap, const AtomParams& atom,
                           const BudgetInputs& in);

// Aligned plain-text rendering of a report, sigma/2pi in Hz.
std::string format_budget_table(const BudgetReport& report);

}  // namespace dephasim
