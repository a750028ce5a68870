#include "dephasim/trap.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace dephasim {

namespace {

// Fraction of the gamma(3) distribution below x = E/kBT.
double gamma3_cdf(double x) {
  if (x <= 0.0) return 0.0;
  return 1.0 - std::exp(-x) * (1.0 + x + x * x / 2.0);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double draw_gamma3(std::mt19937_64& eng, double temperature) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double log_prod = 0.0;
  for (int i = 0; i < 3; ++i) log_prod += std::log(1.0 - uni(eng));  // (0, 1]
  return -temperature * log_prod;
}

}  // namespace

TrapConfig TrapConfig::cesium(double depth_kelvin) {
  const AtomParams cs = dephasim::cesium();
  return TrapConfig{
      .depth_kelvin = depth_kelvin,
      .eta = kEtaCesium1064,
      .effective_detuning = -1.2e7 * cs.linewidth,
      .hyperfine_splitting = cs.hyperfine_splitting,
      .laser_wavelength = 1064e-9,
      .relative_intensity = std::nullopt,
  };
}

double eta_from_detunings(double hyperfine_splitting, double effective_detuning) {
  if (effective_detuning == 0.0) throw std::invalid_argument("effective detuning must be nonzero");
  return std::abs(hyperfine_splitting / effective_detuning);
}

double trap_depth_from_intensity(const TrapConfig& trap, const AtomParams& atom) {
  if (!trap.relative_intensity)
    throw std::invalid_argument("trap_depth_from_intensity: relative_intensity not configured");
  if (*trap.relative_intensity < 0.0)
    throw std::invalid_argument("relative intensity must be >= 0");
  if (trap.effective_detuning == 0.0)
    throw std::invalid_argument("effective detuning must be nonzero");
  const double g = atom.linewidth;
  const double u0 = kHbar * g / 8.0 * (*trap.relative_intensity) * (g / trap.effective_detuning);
  return std::abs(u0) / kBoltzmann;
}

double delta0_max(double depth_kelvin, double eta) {
  if (!(depth_kelvin > 0.0)) throw std::invalid_argument("trap depth must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  return -eta * kBoltzmann * depth_kelvin / kHbar;
}

double depth_from_delta0(double delta0, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  return std::abs(delta0) * kHbar / (eta * kBoltzmann);
}

double boltzmann_pdf(double energy, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (energy < 0.0) return 0.0;
  const double t3 = temperature * temperature * temperature;
  return energy * energy / (2.0 * t3) * std::exp(-energy / temperature);
}

double delta_ls_of_energy(double energy, double delta0, double eta) {
  return delta0 + eta * kBoltzmann * energy / (2.0 * kHbar);
}

LightShiftDistribution LightShiftDistribution::from(double delta0, double eta,
                                                    double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  return LightShiftDistribution{delta0, 2.0 * kHbar / (eta * kBoltzmann * temperature)};
}

double lightshift_pdf(double delta_ls, const LightShiftDistribution& dist) {
  const double s = delta_ls - dist.delta0;
  if (s < 0.0) return 0.0;
  const double k = dist.k_time;
  return k * k * k / 2.0 * s * s * std::exp(-k * s);
}

double lightshift_cdf(double delta_ls, const LightShiftDistribution& dist) {
  return gamma3_cdf(dist.k_time * (delta_ls - dist.delta0));
}

std::uint64_t atom_stream_seed(std::uint64_t base_seed, std::uint64_t atom_index) {
  return mix64(base_seed ^ mix64(atom_index + 0x51ab5e1dull));
}

double sample_energy(std::uint64_t stream_seed, double temperature,
                     std::optional<double> truncation_energy) {
  std::mt19937_64 eng(stream_seed);
  if (!truncation_energy) return draw_gamma3(eng, temperature);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double e = draw_gamma3(eng, temperature);
    if (e <= *truncation_energy) return e;
  }
  throw std::runtime_error("energy truncation rejection did not terminate");
}

std::vector<double> sample_ensemble(const EnsembleSpec& ens) {
  if (!(ens.temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (ens.atom_count <= 0) throw std::invalid_argument("atom count must be > 0");
  if (ens.truncation_energy) {
    const double accept = gamma3_cdf(*ens.truncation_energy / ens.temperature);
    if (accept < 0.01)
      throw std::invalid_argument(
          "energy truncation acceptance below 1%; raise the bound or lower the temperature");
  }
  std::vector<double> energies(static_cast<std::size_t>(ens.atom_count));
  for (std::size_t i = 0; i < energies.size(); ++i)
    energies[i] = sample_energy(atom_stream_seed(ens.rng_seed, i), ens.temperature,
                                ens.truncation_energy);
  return energies;
}

double t2star_from_temperature(double temperature, double eta) {
  const auto dist = LightShiftDistribution::from(0.0, eta, temperature);
  return std::sqrt(std::expm1(2.0 / 3.0)) * dist.k_time;
}

double temperature_from_t2star(double t2star, double eta) {
  if (!(t2star > 0.0)) throw std::invalid_argument("t2star must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  const double k = t2star / std::sqrt(std::expm1(2.0 / 3.0));
  return 2.0 * kHbar / (eta * kBoltzmann * k);
}

bool virial_regime_ok(double temperature, double depth_kelvin) {
  return temperature <= depth_kelvin / 4.0;
}

}  // namespace dephasim
