#include "dephasim/noise.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace dephasim {

namespace {

template <class F>
double simpson(const F& f, double a, double b, int intervals) {
  // composite Simpson; intervals must be even
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

double gamma_of_small_int(int n) {
  double g = 1.0;
  for (int i = 2; i < n; ++i) g *= i;
  return g;
}

}  // namespace

double allan_deviation_raw(std::span<const double> values, std::size_t samples_per_window) {
  if (samples_per_window == 0) throw std::invalid_argument("window length must be > 0");
  const std::size_t windows = values.size() / samples_per_window;
  if (windows < 2)
    throw std::invalid_argument("Allan deviation needs at least " +
                                std::to_string(2 * samples_per_window) + " samples (2 windows)");
  std::vector<double> means(windows);
  for (std::size_t k = 0; k < windows; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < samples_per_window; ++j) s += values[k * samples_per_window + j];
    means[k] = s / static_cast<double>(samples_per_window);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < windows; ++k) {
    const double d = means[k + 1] - means[k];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(windows - 1) / 2.0);
}

double allan_deviation(const TimeSeries& series, double tau) {
  if (!(series.sample_interval > 0.0)) throw std::invalid_argument("sample interval must be > 0");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  const double ratio = tau / series.sample_interval;
  const auto nper = static_cast<std::size_t>(std::llround(ratio));
  if (nper == 0 || std::abs(ratio - static_cast<double>(nper)) > 1e-6 * ratio)
    throw std::invalid_argument("tau must be a positive integer multiple of the sample interval");
  double mean = 0.0;
  for (const double v : series.values) mean += v;
  mean /= static_cast<double>(series.values.size());
  if (mean == 0.0)
    throw std::invalid_argument("series mean is zero; relative Allan deviation undefined");
  std::vector<double> scaled(series.values.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = series.values[i] / mean;
  return allan_deviation_raw(scaled, nper);
}

double sigma_from_allan(double allan_dev, double delta0) {
  if (allan_dev < 0.0) throw std::invalid_argument("Allan deviation must be >= 0");
  return std::sqrt(2.0) * std::abs(delta0) * allan_dev;
}

double heating_sigma(const HeatingModel& model, double t2prime, double eta) {
  if (model.heating_rate < 0.0) throw std::invalid_argument("heating rate must be >= 0");
  if (!(model.temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (model.dimension < 1 || model.dimension > 3)
    throw std::invalid_argument("heating dimension must be 1, 2 or 3");
  if (!(t2prime > 0.0)) throw std::invalid_argument("t2prime must be > 0");
  const double n = model.dimension;
  return eta * kBoltzmann / kHbar *
         std::sqrt(n / 2.0 * model.heating_rate * t2prime * model.temperature);
}

double heating_sigma_mixture(const HeatingModel& model, double tau_pi, double eta) {
  if (!(tau_pi > 0.0)) throw std::invalid_argument("tau_pi must be > 0");
  if (model.dimension < 1 || model.dimension > 3)
    throw std::invalid_argument("heating dimension must be 1, 2 or 3");
  const double t = model.temperature;
  const int n = model.dimension;
  const double norm = gamma_of_small_int(n) * std::pow(t, n);

  // variance of the Gaussian detuning drift for one atom of energy e (kelvin)
  auto inner_variance = [&](double e) {
    const double sig = eta * kBoltzmann / kHbar * std::sqrt(e * model.heating_rate * tau_pi);
    if (sig == 0.0) return 0.0;
    auto f = [&](double x) {
      const double z = x / sig;
      return x * x * std::exp(-0.5 * z * z) / (sig * std::sqrt(2.0 * std::numbers::pi));
    };
    return simpson(f, -8.0 * sig, 8.0 * sig, 2000);
  };
  auto outer = [&](double e) {
    const double p = std::pow(e, n - 1) * std::exp(-e / t) / norm;
    return p * inner_variance(e);
  };
  const double var = simpson(outer, 0.0, 50.0 * t, 6000);
  return std::sqrt(var);
}

double photon_recoil_sigma(double temperature, double scattering_rate, double tau_pi,
                           double wavelength, double mass, double eta) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (scattering_rate < 0.0) throw std::invalid_argument("scattering rate must be >= 0");
  if (!(tau_pi > 0.0)) throw std::invalid_argument("tau_pi must be > 0");
  if (!(wavelength > 0.0) || !(mass > 0.0))
    throw std::invalid_argument("wavelength and mass must be > 0");
  const double k = kTwoPi / wavelength;
  const double gt = scattering_rate * tau_pi;
  return eta * k * std::sqrt(3.0 * kBoltzmann * temperature * gt / mass) * std::exp(-gt / 2.0);
}

double photon_recoil_sigma_single(double temperature, double wavelength, double mass, double eta) {
  const double k = kTwoPi / wavelength;
  return eta * k * std::sqrt(3.0 * kBoltzmann * temperature / mass);
}

double zeeman_offset(double b0, double quad_coeff) {
  return kTwoPi * quad_coeff * b0 * b0;
}

double magnetic_shift(double b0, double delta_b, double quad_coeff) {
  return kTwoPi * 2.0 * quad_coeff * b0 * delta_b;
}

double magnetic_sigma(double tau, double delta_omega, double line_freq) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(line_freq > 0.0)) throw std::invalid_argument("line frequency must be > 0");
  if (delta_omega < 0.0) throw std::invalid_argument("delta_omega must be >= 0");
  constexpr std::size_t kPerWindow = 200;
  constexpr std::size_t kWindows = 400;
  const double dt = tau / static_cast<double>(kPerWindow);
  std::vector<double> sine(kPerWindow * kWindows);
  for (std::size_t j = 0; j < sine.size(); ++j)
    sine[j] = std::sin(kTwoPi * line_freq * static_cast<double>(j) * dt);
  return std::sqrt(2.0) * delta_omega * allan_deviation_raw(sine, kPerWindow);
}

double microwave_jitter(double rel_amplitude, double rel_duration) {
  return std::hypot(rel_amplitude, rel_duration);
}

double raman_suppression_beta(double trap_wavelength, const AtomParams& atom) {
  if (!(trap_wavelength > 0.0)) throw std::invalid_argument("wavelength must be > 0");
  const double w_l = kTwoPi * kSpeedOfLight / trap_wavelength;
  const double d_half = w_l - kTwoPi * kSpeedOfLight / atom.d1_wavelength;
  const double d_three_half = w_l - kTwoPi * kSpeedOfLight / atom.d2_wavelength;
  if (d_half == 0.0) throw std::invalid_argument("trap frequency coincides with the D1 line");
  const double d_fs = d_three_half - d_half;
  const double r = d_fs / (3.0 * d_half);
  return r * r;
}

double t1_from_scattering(double scattering_rate, double beta) {
  if (!(scattering_rate > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("scattering rate and beta must be > 0");
  return 1.0 / (beta * scattering_rate);
}

namespace {

std::optional<double> resolve_sigma_a(const std::optional<double>& direct,
                                      const std::optional<TimeSeries>& series, double t2prime) {
  if (direct) return direct;
  if (series) return allan_deviation(*series, t2prime);
  return std::nullopt;
}

void attach_reference(NoiseBudgetEntry& e, const BudgetInputs& in) {
  for (const auto& [name, sigma] : in.references)
    if (name == e.mechanism) e.reference_sigma = sigma;
}

}  // namespace

BudgetReport budget_report(const TrapConfig& trap, const AtomParams& atom,
                           const BudgetInputs& in) {
  double t2prime = 0.0;
  if (in.t2prime) {
    t2prime = *in.t2prime;
  } else if (in.sigma_exp) {
    t2prime = std::sqrt(2.0) / *in.sigma_exp;
  } else {
    throw std::invalid_argument("budget needs t2prime or sigma_exp to fix the time scale");
  }
  if (!(t2prime > 0.0)) throw std::invalid_argument("t2prime must be > 0");

  const double delta0 = delta0_max(trap.depth_kelvin, trap.eta);
  BudgetReport rep;
  rep.t2prime = t2prime;
  auto add = [&](std::string name, double sigma, Provenance prov) {
    NoiseBudgetEntry e{std::move(name), sigma, prov, std::nullopt};
    attach_reference(e, in);
    rep.entries.push_back(std::move(e));
  };

  if (in.sigma_exp) add("measured", *in.sigma_exp, Provenance::measured);

  if (auto sa = resolve_sigma_a(in.intensity_sigma_a, in.intensity_series, t2prime))
    add("intensity", sigma_from_allan(*sa, delta0), Provenance::measured);
  if (auto sa = resolve_sigma_a(in.pointing_best_sigma_a, in.pointing_best_series, t2prime))
    add("pointing best", sigma_from_allan(*sa, delta0), Provenance::measured);
  if (auto sa = resolve_sigma_a(in.pointing_worst_sigma_a, in.pointing_worst_series, t2prime))
    add("pointing worst", sigma_from_allan(*sa, delta0), Provenance::measured);
  if (in.heating) add("heating", heating_sigma(*in.heating, t2prime, trap.eta), Provenance::model);
  if (in.photon)
    add("photon recoil",
        photon_recoil_sigma(in.photon->temperature, in.photon->scattering_rate, t2prime / 2.0,
                            trap.laser_wavelength, atom.mass, trap.eta),
        Provenance::model);
  if (in.magnetic)
    add("magnetic",
        magnetic_sigma(t2prime,
                       magnetic_shift(in.magnetic->b0, in.magnetic->delta_b,
                                      atom.quad_zeeman_hz_per_t2),
                       in.magnetic->line_freq),
        Provenance::model);

  double q_best = 0.0;
  double q_worst = 0.0;
  bool any = false;
  for (const auto& e : rep.entries) {
    if (e.mechanism == "measured") continue;
    any = true;
    const double s2 = e.sigma * e.sigma;
    if (e.mechanism != "pointing worst") q_best += s2;
    if (e.mechanism != "pointing best") q_worst += s2;
  }
  if (any) {
    rep.total_best = std::sqrt(q_best);
    rep.total_worst = std::sqrt(q_worst);
  }
  return rep;
}

std::string format_budget_table(const BudgetReport& report) {
  std::ostringstream os;
  os << std::fixed;
  os << "T2' = " << std::setprecision(2) << report.t2prime * 1e3 << " ms\n";
  os << std::left << std::setw(16) << "mechanism" << std::right << std::setw(14)
     << "sigma/2pi[Hz]" << std::setw(11) << "source";
  bool any_ref = false;
  for (const auto& e : report.entries) any_ref |= e.reference_sigma.has_value();
  if (any_ref) os << std::setw(14) << "ref/2pi[Hz]";
  os << "\n";
  for (const auto& e : report.entries) {
    os << std::left << std::setw(16) << e.mechanism << std::right << std::setw(14)
       << std::setprecision(3) << e.sigma / kTwoPi << std::setw(11)
       << (e.provenance == Provenance::measured ? "measured" : "model");
    if (e.reference_sigma)
      os << std::setw(14) << std::setprecision(3) << *e.reference_sigma / kTwoPi;
    else if (any_ref)
      os << std::setw(14) << "-";
    os << "\n";
  }
  if (report.total_best && report.total_worst) {
    if (std::abs(*report.total_best - *report.total_worst) < 1e-15) {
      os << std::left << std::setw(16) << "total" << std::right << std::setw(14)
         << std::setprecision(3) << *report.total_best / kTwoPi << "\n";
    } else {
      os << std::left << std::setw(16) << "total (best)" << std::right << std::setw(14)
         << std::setprecision(3) << *report.total_best / kTwoPi << "\n";
      os << std::left << std::setw(16) << "total (worst)" << std::right << std::setw(14)
         << std::setprecision(3) << *report.total_worst / kTwoPi << "\n";
    }
  }
  return os.str();
}

}  // namespace dephasim
