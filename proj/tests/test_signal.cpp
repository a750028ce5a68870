#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dephasim/bloch.hpp"
#include "dephasim/signal.hpp"
#include "support/quadrature.hpp"

using namespace dephasim;
using test_support::gamma3_characteristic;
using test_support::simpson;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace

TEST_CASE("envelope and phase drag match the ensemble average") {
  // The fringe contrast and phase drag are the magnitude and (negated) phase
  // of <exp(i (delta - delta0) t)> over the light-shift distribution, which
  // reduces to the gamma(3) characteristic function at tau = s * t / T2*.
  const double t2star = 4.4e-3;
  const auto exact = EnvelopeCoeffs::exact();
  for (const double t : {0.3e-3, 1.0e-3, 2.2e-3, 4.4e-3, 8.8e-3, 13.2e-3}) {
    const auto [mag, phase] = gamma3_characteristic(exact.slope * t / t2star);
    CHECK(envelope_alpha(t, t2star, exact) == doctest::Approx(mag).epsilon(1e-8));
    // kappa is continuous while the oracle phase is principal-valued
    CHECK(std::abs(std::remainder(phase_kappa(t, t2star, exact) + phase, kTwoPi)) < 1e-7);
  }
  // rounded two-digit coefficients stay within a percent of the exact curve
  const auto rounded = EnvelopeCoeffs::rounded();
  CHECK(rounded.curvature == 0.95);
  CHECK(rounded.slope == 0.97);
  for (const double t : {1.0e-3, 4.4e-3, 8.8e-3}) {
    CHECK(envelope_alpha(t, t2star, rounded) ==
          doctest::Approx(envelope_alpha(t, t2star, exact)).epsilon(0.01));
    CHECK(phase_kappa(t, t2star, rounded) ==
          doctest::Approx(phase_kappa(t, t2star, exact)).epsilon(0.01));
  }
}

TEST_CASE("envelope reaches 1/e at the dephasing time") {
  const double t2star = 4.4e-3;
  CHECK(envelope_alpha(t2star, t2star) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  // rounded coefficients put the 1/e point within 0.3%
  CHECK(envelope_alpha(t2star, t2star, EnvelopeCoeffs::rounded()) ==
        doctest::Approx(std::exp(-1.0)).epsilon(3e-3));
  CHECK(envelope_alpha(0.0, t2star) == 1.0);
  CHECK(phase_kappa(0.0, t2star) == 0.0);
  // alpha is even and kappa odd in t
  CHECK(envelope_alpha(-2e-3, t2star) == envelope_alpha(2e-3, t2star));
  CHECK(phase_kappa(-2e-3, t2star) == -phase_kappa(2e-3, t2star));
}

TEST_CASE("free-induction fringe values") {
  const RamseyParams p{0.5, 0.5, kTwoPi * 2133.7, 4.4e-3, 0.0};
  CHECK(ramsey_p3(0.0, p) == doctest::Approx(1.0).epsilon(1e-12));
  // quarter period later the fringe has rotated by pi/2 and lost contrast
  const double t = 1.0 / (4.0 * 2133.7);
  const double expect = 0.5 + 0.5 * envelope_alpha(t, p.t2star) *
                                  std::cos(kTwoPi / 4.0 + phase_kappa(t, p.t2star));
  CHECK(ramsey_p3(t, p) == doctest::Approx(expect).epsilon(1e-12));
  // detection scaling enters linearly: P3 = B + A * (fringe with unit contrast)
  const RamseyParams q{0.287, 0.305, p.delta_sum, p.t2star, 0.35};
  const RamseyParams unit{1.0, 0.0, p.delta_sum, p.t2star, 0.35};
  CHECK(ramsey_p3(2e-3, q) ==
        doctest::Approx(0.305 + 0.287 * ramsey_p3(2e-3, unit)).epsilon(1e-12));
  CHECK(ramsey_p3(0.0, q) == doctest::Approx(0.305 + 0.287 * std::cos(0.35)).epsilon(1e-12));
}

TEST_CASE("echo is the mirrored fringe about the rephasing point") {
  const EchoParams e{0.287, 0.305, kTwoPi * 2133.7, 4.4e-3, 2.0e-3, 0.0};
  // at t = 2 tau_pi the ensemble rephases: P3 = B - A cos(psi)
  CHECK(echo_p3(2.0 * e.tau_pi, e) == doctest::Approx(e.offset - e.amplitude).epsilon(1e-12));
  EchoParams psi = e;
  psi.echo_phase = 0.7;
  CHECK(echo_p3(2.0 * psi.tau_pi, psi) ==
        doctest::Approx(e.offset - e.amplitude * std::cos(0.7)).epsilon(1e-12));
  // symmetric about 2 tau_pi for psi = 0
  for (const double x : {0.3e-3, 0.9e-3, 1.7e-3})
    CHECK(echo_p3(2.0 * e.tau_pi + x, e) ==
          doctest::Approx(echo_p3(2.0 * e.tau_pi - x, e)).epsilon(1e-12));
  // equals the generic form built from the envelope helpers directly
  for (const double t : {2.5e-3, 4.0e-3, 7.3e-3}) {
    const double x = t - 2.0 * e.tau_pi;
    const double expect =
        e.offset - envelope_alpha(x, e.t2star) * e.amplitude *
                       std::cos(e.delta_sum * x + phase_kappa(x, e.t2star));
    CHECK(echo_p3(t, e) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("homogeneous echo visibility") {
  const double sigma = kTwoPi * 22.0;
  // Gaussian averaging of cos(d * tau) gives exp(-tau^2 sigma^2 / 2)
  for (const double tau : {0.3 / sigma, 1.0 / sigma, 2.5 / sigma}) {
    const double avg = simpson(
        [&](double d) {
          const double g =
              std::exp(-d * d / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
          return g * std::cos(d * tau);
        },
        -8.0 * sigma, 8.0 * sigma, 20000);
    CHECK(visibility_hom(tau, sigma) == doctest::Approx(avg).epsilon(1e-10));
  }
  // 1/e point at tau = sqrt(2)/sigma
  CHECK(visibility_hom(std::sqrt(2.0) / sigma, sigma) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(visibility_hom(10.2e-3, sigma, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(0.02));
  CHECK(visibility_hom(1e-3, sigma, 0.5) ==
        doctest::Approx(0.5 * visibility_hom(1e-3, sigma)).epsilon(1e-14));
}

TEST_CASE("monte carlo converges to the closed-form fringe") {
  const TrapConfig trap = TrapConfig::cesium(1e-3);
  const double delta0 = delta0_max(trap.depth_kelvin, trap.eta);
  const double temp = temperature_from_t2star(4.4e-3, trap.eta);
  const EnsembleSpec ens{temp, 20000, std::nullopt, 2024};
  const DetectionScaling det{0.287, 0.305};

  SequenceSpec seq;
  seq.kind = SequenceKind::ramsey;
  seq.delta_synth = kTwoPi * (2133.7 + 412.0) + delta0;
  seq.delta_b = kTwoPi * 412.0;
  seq.phase = 0.35;
  const auto times = linspace(0.0, 10e-3, 21);
  const auto mc = monte_carlo_signal(seq, ens, trap, {}, times, det);
  REQUIRE(mc.size() == times.size());
  const RamseyParams closed{det.amplitude, det.offset, kTwoPi * 2133.7, 4.4e-3, 0.35};
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double ref = ramsey_p3(times[i], closed);
    CHECK(std::abs(mc[i].p3 - ref) < 4.0 * mc[i].std_error + 1e-4);
  }

  SequenceSpec echo = seq;
  echo.kind = SequenceKind::echo;
  echo.tau_pi = 2.0e-3;
  echo.phase = 0.0;
  const auto times_e = linspace(2e-3, 10e-3, 17);
  const auto mce = monte_carlo_signal(echo, ens, trap, {}, times_e, det);
  const EchoParams closed_e{det.amplitude, det.offset, kTwoPi * 2133.7, 4.4e-3, 2.0e-3, 0.0};
  for (std::size_t i = 0; i < times_e.size(); ++i) {
    const double ref = echo_p3(times_e[i], closed_e);
    CHECK(std::abs(mce[i].p3 - ref) < 4.0 * mce[i].std_error + 1e-4);
  }
}

TEST_CASE("monte carlo rabi line matches the ensemble-averaged two-level model") {
  const TrapConfig trap = TrapConfig::cesium(1e-3);
  const double delta0 = delta0_max(trap.depth_kelvin, trap.eta);
  const double temp = temperature_from_t2star(4.4e-3, trap.eta);
  const EnsembleSpec ens{temp, 20000, std::nullopt, 31};
  const DetectionScaling det{0.302, 0.302};

  SequenceSpec seq;
  seq.kind = SequenceKind::rabi;
  seq.rabi_frequency = kTwoPi * 14.6e3;
  seq.delta_synth = delta0;  // resonant with the trap bottom
  const auto dist = LightShiftDistribution::from(delta0, trap.eta, temp);
  const auto times = linspace(0.0, 225e-6, 10);
  const auto mc = monte_carlo_signal(seq, ens, trap, {}, times, det);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    // average the detuned two-level inversion over the light-shift density
    const double w_avg = simpson(
        [&](double d) {
          return lightshift_pdf(d, dist) *
                 rabi_w_detuned(seq.rabi_frequency, d - delta0, t);
        },
        delta0, delta0 + 60.0 / dist.k_time, 20000);
    const double ref = det.offset + det.amplitude * w_avg;
    CHECK(std::abs(mc[i].p3 - ref) < 4.0 * mc[i].std_error + 1e-4);
  }
}

TEST_CASE("standard error shrinks as the root of the atom number") {
  const TrapConfig trap = TrapConfig::cesium(1e-3);
  const double temp = temperature_from_t2star(4.4e-3, trap.eta);
  SequenceSpec seq;
  seq.kind = SequenceKind::ramsey;
  seq.delta_synth = delta0_max(trap.depth_kelvin, trap.eta) + kTwoPi * 2000.0;
  const std::vector<double> times{3e-3};
  const DetectionScaling det{0.5, 0.5};
  const auto small = monte_carlo_signal(seq, EnsembleSpec{temp, 1000, std::nullopt, 8},
                                        trap, {}, times, det);
  const auto large = monte_carlo_signal(seq, EnsembleSpec{temp, 16000, std::nullopt, 8},
                                        trap, {}, times, det);
  CHECK(small[0].std_error / large[0].std_error == doctest::Approx(4.0).epsilon(0.3));
  CHECK(small[0].std_error > 0.0);
}

TEST_CASE("monte carlo is deterministic in the seed") {
  const TrapConfig trap = TrapConfig::cesium(1e-3);
  const EnsembleSpec ens{1e-4, 3000, std::nullopt, 123};
  SequenceSpec seq;
  seq.kind = SequenceKind::echo;
  seq.tau_pi = 1.5e-3;
  seq.delta_synth = delta0_max(trap.depth_kelvin, trap.eta) + kTwoPi * 1500.0;
  const auto times = linspace(1.5e-3, 6e-3, 7);
  const HomogeneousNoise noise{kTwoPi * 30.0};
  const DetectionScaling det{0.3, 0.3};
  const auto a = monte_carlo_signal(seq, ens, trap, noise, times, det);
  const auto b = monte_carlo_signal(seq, ens, trap, noise, times, det);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].p3 == b[i].p3);
    CHECK(a[i].std_error == b[i].std_error);
  }
  EnsembleSpec other = ens;
  other.rng_seed = 124;
  const auto c = monte_carlo_signal(seq, other, trap, noise, times, det);
  CHECK(a[0].p3 != c[0].p3);
}

TEST_CASE("echo noise damps the revival by the gaussian visibility") {
  const TrapConfig trap = TrapConfig::cesium(1e-3);
  const double temp = temperature_from_t2star(4.4e-3, trap.eta);
  const EnsembleSpec ens{temp, 40000, std::nullopt, 555};
  const double sigma = kTwoPi * 60.0;
  SequenceSpec seq;
  seq.kind = SequenceKind::echo;
  seq.tau_pi = 5.0e-3;
  seq.delta_synth = delta0_max(trap.depth_kelvin, trap.eta);
  const std::vector<double> times{2.0 * seq.tau_pi};
  const DetectionScaling det{0.3, 0.3};
  const auto mc = monte_carlo_signal(seq, ens, trap, HomogeneousNoise{sigma}, times, det);
  const double expect = det.offset - det.amplitude * visibility_hom(seq.tau_pi, sigma);
  CHECK(std::abs(mc[0].p3 - expect) < 4.0 * mc[0].std_error + 1e-4);
  // without noise the revival is complete
  const auto quiet = monte_carlo_signal(seq, ens, trap, {}, times, det);
  CHECK(quiet[0].p3 == doctest::Approx(det.offset - det.amplitude).epsilon(1e-9));
}

TEST_CASE("synthesizer input validation") {
  const TrapConfig trap = TrapConfig::cesium(1e-3);
  const EnsembleSpec ens{1e-4, 10, std::nullopt, 1};
  const DetectionScaling det{0.5, 0.5};
  SequenceSpec seq;
  seq.kind = SequenceKind::ramsey;
  CHECK_THROWS_AS(monte_carlo_signal(seq, ens, trap, {}, std::vector<double>{}, det),
                  std::invalid_argument);
  CHECK_THROWS_AS(monte_carlo_signal(seq, ens, trap, {}, std::vector<double>{-1e-3}, det),
                  std::invalid_argument);
  SequenceSpec echo = seq;
  echo.kind = SequenceKind::echo;
  echo.tau_pi = 2e-3;
  CHECK_THROWS_AS(monte_carlo_signal(echo, ens, trap, {}, std::vector<double>{1e-3}, det),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      monte_carlo_signal(seq, ens, trap, HomogeneousNoise{-1.0}, std::vector<double>{1e-3}, det),
      std::invalid_argument);
  CHECK_THROWS_AS(monte_carlo_signal(seq, EnsembleSpec{1e-4, 0, std::nullopt, 1}, trap, {},
                                     std::vector<double>{1e-3}, det),
                  std::invalid_argument);
  CHECK_THROWS_AS(envelope_alpha(1e-3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(visibility_hom(1e-3, -1.0), std::invalid_argument);
}
