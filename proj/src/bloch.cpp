#include "dephasim/bloch.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dephasim {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite ") + what);
}

void require_finite(const BlochVector& u, const char* what) {
  require_finite(u.u, what);
  require_finite(u.v, what);
  require_finite(u.w, what);
}

// Pure-rotation sequences must preserve the Bloch-vector norm; a drift beyond
// 1e-6 indicates a broken rotation matrix rather than accumulated rounding.
void check_norm_drift(const BlochVector& before, const BlochVector& after) {
  if (std::abs(after.norm() - before.norm()) > 1e-6)
    throw std::logic_error("Bloch norm drift exceeded 1e-6 in pure-rotation path");
}

}  // namespace

double p3_from_w(double w) { return (w + 1.0) / 2.0; }
double w_from_p3(double p3) { return 2.0 * p3 - 1.0; }

Eigen::Matrix3d pi2_matrix() {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, 0, 1, 0, -1, 0;
  return m;
}

Eigen::Matrix3d pi_matrix() {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return m;
}

Eigen::Matrix3d free_phase_matrix(double phi) {
  require_finite(phi, "precession phase");
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::Matrix3d m;
  m << c, s, 0, -s, c, 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d free_matrix(double delta, double t) {
  require_finite(delta, "detuning");
  require_finite(t, "duration");
  if (t < 0.0) throw std::invalid_argument("free evolution duration must be >= 0");
  return free_phase_matrix(delta * t);
}

PulseProgram PulseProgram::ramsey(double detuning, double t, double phase) {
  PulseProgram p;
  p.elements = {HalfPiPulse{}, FreeEvolution{t, detuning}, PhaseAdvance{phase}, HalfPiPulse{}};
  return p;
}

PulseProgram PulseProgram::echo(double detuning_first, double detuning_second, double tau_pi,
                                double t, double phase) {
  if (t < tau_pi) throw std::invalid_argument("echo readout time must be >= tau_pi");
  PulseProgram p;
  p.elements = {HalfPiPulse{},
                FreeEvolution{tau_pi, detuning_first},
                PiPulse{},
                FreeEvolution{t - tau_pi, detuning_second},
                PhaseAdvance{phase},
                HalfPiPulse{}};
  return p;
}

BlochVector apply_program(const PulseProgram& prog, const BlochVector& u0) {
  require_finite(u0, "initial state");
  Eigen::Vector3d x = u0.vec();
  for (const PulseElement& el : prog.elements) {
    std::visit(
        [&x](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, HalfPiPulse>) {
            x = pi2_matrix() * x;
          } else if constexpr (std::is_same_v<T, PiPulse>) {
            x = pi_matrix() * x;
          } else if constexpr (std::is_same_v<T, FreeEvolution>) {
            x = free_matrix(e.detuning, e.duration) * x;
          } else {
            x = free_phase_matrix(e.phase) * x;
          }
        },
        el);
  }
  BlochVector out = BlochVector::from(x);
  check_norm_drift(u0, out);
  return out;
}

double echo_w_perturbed(double delta_diff, double tau_pi) {
  require_finite(delta_diff, "detuning difference");
  require_finite(tau_pi, "tau_pi");
  return -std::cos(delta_diff * tau_pi);
}

double pulse_phase_offset(double t_half_pi, double delta_sum) {
  return 2.0 * t_half_pi * delta_sum;
}

DampingParams DampingParams::from_components(double t2prime, double t2star, double t1,
                                             double w_stationary) {
  if (!(t2prime > 0.0) || !(t2star > 0.0) || !(t1 > 0.0))
    throw std::invalid_argument("damping times must be positive");
  DampingParams d;
  const double rate = 1.0 / t2prime + 1.0 / t2star;
  d.t2 = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  d.t1 = t1;
  d.w_stationary = w_stationary;
  return d;
}

BlochVector integrate_damped_bloch(const TorqueParams& torque, const DampingParams& damping,
                                   const BlochVector& u0, double t, double dt_max) {
  require_finite(torque.rabi_frequency, "Rabi frequency");
  require_finite(torque.detuning, "detuning");
  require_finite(u0, "initial state");
  require_finite(t, "integration time");
  if (torque.rabi_frequency < 0.0) throw std::invalid_argument("Rabi frequency must be >= 0");
  if (t < 0.0) throw std::invalid_argument("integration time must be >= 0");
  if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be > 0");
  if (!(damping.t2 > 0.0) || !(damping.t1 > 0.0))
    throw std::invalid_argument("damping times must be positive");
  require_finite(damping.w_stationary, "stationary inversion");

  const double omega = torque.rabi_frequency;
  const double delta = torque.detuning;
  const double g2 = std::isinf(damping.t2) ? 0.0 : 1.0 / damping.t2;
  const double g1 = std::isinf(damping.t1) ? 0.0 : 1.0 / damping.t1;
  const double wst = damping.w_stationary;

  auto deriv = [&](const Eigen::Vector3d& x) -> Eigen::Vector3d {
    return {delta * x[1] - g2 * x[0],
            -delta * x[0] + omega * x[2] - g2 * x[1],
            -omega * x[1] - g1 * (x[2] - wst)};
  };

  if (t == 0.0) return u0;
  const auto steps = static_cast<long>(std::ceil(t / dt_max));
  const double h = t / static_cast<double>(steps);
  Eigen::Vector3d x = u0.vec();
  for (long i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = deriv(x);
    const Eigen::Vector3d k2 = deriv(x + 0.5 * h * k1);
    const Eigen::Vector3d k3 = deriv(x + 0.5 * h * k2);
    const Eigen::Vector3d k4 = deriv(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return BlochVector::from(x);
}

double rabi_p3(double rabi_frequency, double t, double contrast) {
  require_finite(rabi_frequency, "Rabi frequency");
  require_finite(t, "time");
  return contrast / 2.0 * (1.0 - std::cos(rabi_frequency * t));
}

double rabi_w_detuned(double rabi_frequency, double detuning, double t) {
  const double o2 = rabi_frequency * rabi_frequency;
  const double d2 = detuning * detuning;
  const double oe2 = o2 + d2;
  if (oe2 == 0.0) return -1.0;
  return -(d2 + o2 * std::cos(std::sqrt(oe2) * t)) / oe2;
}

}  // namespace dephasim
