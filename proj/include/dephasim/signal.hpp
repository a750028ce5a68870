#pragma once

#include <span>
#include <vector>

#include "dephasim/trap.hpp"

// Closed-form Ramsey / spin-echo signals of the trapped ensemble and the
// matching Monte Carlo synthesizer.

namespace dephasim {

// Envelope curvature and phase-slope constants. The exact values follow from
// the gamma-shaped light-shift distribution: curvature e^(2/3)-1, slope
// sqrt(e^(2/3)-1); the rounded pair is the two-digit form widely quoted for
// this line shape.
struct EnvelopeCoeffs {
  double curvature;
  double slope;

  static EnvelopeCoeffs exact();
  static EnvelopeCoeffs rounded();  // 0.95 / 0.97
};

// Inhomogeneous fringe envelope alpha(t) = [1 + c (t/T2*)^2]^(-3/2); equals
// 1/e at t = T2* with the exact curvature.
double envelope_alpha(double t, double t2star, const EnvelopeCoeffs& c = EnvelopeCoeffs::exact());

// Fringe phase drag kappa(t) = -3 atan(s * t / T2*); odd in t.
double phase_kappa(double t, double t2star, const EnvelopeCoeffs& c = EnvelopeCoeffs::exact());

// P3 = B + alpha(t) * A * cos(delta_sum * t + kappa(t) + phi), where
// delta_sum = delta_synth - delta_B - delta0 is the fringe detuning.
struct RamseyParams {
  double amplitude;      // A
  double offset;         // B
  double delta_sum;      // rad/s
  double t2star;         // s
  double phase_offset;   // rad, phi
};

double ramsey_p3(double t, const RamseyParams& p,
                 const EnvelopeCoeffs& c = EnvelopeCoeffs::exact());

// P3 = B - alpha(t') * A * cos(delta_sum * t' + kappa(t') + psi), t' = t - 2 tau_pi.
// alpha is even and kappa odd, so the echo rephases at t = 2 tau_pi.
struct EchoParams {
  double amplitude;
  double offset;
  double delta_sum;
  double t2star;
  double tau_pi;       // s
  double echo_phase;   // rad, psi
};

double echo_p3(double t, const EchoParams& p, const EnvelopeCoeffs& c = EnvelopeCoeffs::exact());

// Echo visibility after averaging a Gaussian detuning change (std sigma)
// between the two intervals: V(2 tau_pi) = v0 * exp(-tau_pi^2 sigma^2 / 2).
double visibility_hom(double tau_pi, double sigma, double v0 = 1.0);

enum class SequenceKind { rabi, ramsey, echo };

// Synthesizer-side description of one pulse sequence. delta_synth and delta_b
// are the synthesizer offset and the static Zeeman shift; each atom adds its
// own light shift on top. phase folds pulse-duration and drift phases in.
struct SequenceSpec {
  SequenceKind kind = SequenceKind::ramsey;
  double delta_synth = 0.0;     // rad/s
  double delta_b = 0.0;         // rad/s
  double tau_pi = 0.0;          // s, echo only
  double phase = 0.0;           // rad, phi or psi
  double rabi_frequency = 0.0;  // rad/s, rabi only
};

// Gaussian detuning fluctuation between the two echo intervals, drawn once
// per atom and time point.
struct HomogeneousNoise {
  double sigma = 0.0;  // rad/s
};

// Linear map from mean inversion to measured population: P3 = B + A * <w>.
struct DetectionScaling {
  double amplitude;  // A
  double offset;     // B
};

struct MonteCarloPoint {
  double p3;
  double std_error;
};

// Per-atom pulse-program simulation averaged over the thermal ensemble.
// Deterministic for a given ensemble seed, independent of worker partitioning.
std::vector<MonteCarloPoint> monte_carlo_signal(const SequenceSpec& seq, const EnsembleSpec& ens,
                                                const TrapConfig& trap,
                                                const HomogeneousNoise& noise,
                                                std::span<const double> times,
                                                const DetectionScaling& det);

}  // namespace dephasim
