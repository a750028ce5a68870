#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

// Bloch-vector dynamics of the clock-state pseudo-spin.
//
// Conventions: u = (u, v, w), the lower hyperfine level maps to w = +1 and the
// upper one to w = -1, so the population of the lower level is (w + 1) / 2.
// Detunings are angular frequencies (rad/s), times are seconds.

namespace dephasim {

struct BlochVector {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;

  Eigen::Vector3d vec() const { return {u, v, w}; }
  static BlochVector from(const Eigen::Vector3d& x) { return {x[0], x[1], x[2]}; }
  double norm() const { return vec().norm(); }
};

// Population of the lower hyperfine level for a given inversion w.
double p3_from_w(double w);
double w_from_p3(double p3);

// Ideal instantaneous pulse rotations about the u axis.
Eigen::Matrix3d pi2_matrix();
Eigen::Matrix3d pi_matrix();

// Free precession about the w axis by angle phi = delta * t.
Eigen::Matrix3d free_phase_matrix(double phi);
Eigen::Matrix3d free_matrix(double delta, double t);

struct HalfPiPulse {};
struct PiPulse {};
struct FreeEvolution {
  double duration;  // s
  double detuning;  // rad/s
};
// Fixed extra precession angle; used to fold pulse-duration phase offsets into
// a sequence without changing its timing.
struct PhaseAdvance {
  double phase;  // rad
};

using PulseElement = std::variant<HalfPiPulse, PiPulse, FreeEvolution, PhaseAdvance>;

struct PulseProgram {
  std::vector<PulseElement> elements;

  static PulseProgram ramsey(double detuning, double t, double phase = 0.0);
  static PulseProgram echo(double detuning_first, double detuning_second, double tau_pi,
                           double t, double phase = 0.0);
};

// Applies the program elements in time order to u0 and returns the final state.
BlochVector apply_program(const PulseProgram& prog, const BlochVector& u0);

// Inversion at the echo time 2*tau_pi when the detuning changes by delta_diff
// between the two free-precession intervals: w = -cos(delta_diff * tau_pi).
double echo_w_perturbed(double delta_diff, double tau_pi);

// Extra fringe phase accumulated during two pulses of duration t_half_pi each,
// for a fringe detuning delta_sum: phi = 2 * t_half_pi * delta_sum.
double pulse_phase_offset(double t_half_pi, double delta_sum);

struct TorqueParams {
  double rabi_frequency;  // rad/s, >= 0
  double detuning;        // rad/s
};

// Damping times may be +infinity (no damping). 1/T2 = 1/T2' + 1/T2*.
struct DampingParams {
  double t2 = std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  double w_stationary = 1.0;

  static DampingParams from_components(double t2prime, double t2star, double t1,
                                       double w_stationary = 1.0);
};

// Fixed-step RK4 integration of
//   du/dt = delta * v - u/T2
//   dv/dt = -delta * u + Omega * w - v/T2
//   dw/dt = -Omega * v - (w - w_st)/T1
// over [0, t] with step <= dt_max.
BlochVector integrate_damped_bloch(const TorqueParams& torque, const DampingParams& damping,
                                   const BlochVector& u0, double t, double dt_max);

// Resonant Rabi oscillation of the upper-level population with contrast C:
// P3(t) = C/2 * (1 - cos(Omega t)).
double rabi_p3(double rabi_frequency, double t, double contrast);

// Inversion of a detuned Rabi pulse starting from w = -1 (closed form).
double rabi_w_detuned(double rabi_frequency, double detuning, double t);

}  // namespace dephasim
