#include "dephasim/signal.hpp"

#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "dephasim/bloch.hpp"

namespace dephasim {

EnvelopeCoeffs EnvelopeCoeffs::exact() {
  const double c = std::expm1(2.0 / 3.0);
  return {c, std::sqrt(c)};
}

EnvelopeCoeffs EnvelopeCoeffs::rounded() { return {0.95, 0.97}; }

double envelope_alpha(double t, double t2star, const EnvelopeCoeffs& c) {
  if (!(t2star > 0.0)) throw std::invalid_argument("t2star must be > 0");
  const double y = t / t2star;
  return std::pow(1.0 + c.curvature * y * y, -1.5);
}

double phase_kappa(double t, double t2star, const EnvelopeCoeffs& c) {
  if (!(t2star > 0.0)) throw std::invalid_argument("t2star must be > 0");
  return -3.0 * std::atan(c.slope * t / t2star);
}

double ramsey_p3(double t, const RamseyParams& p, const EnvelopeCoeffs& c) {
  const double alpha = envelope_alpha(t, p.t2star, c);
  const double kappa = phase_kappa(t, p.t2star, c);
  return p.offset + alpha * p.amplitude * std::cos(p.delta_sum * t + kappa + p.phase_offset);
}

double echo_p3(double t, const EchoParams& p, const EnvelopeCoeffs& c) {
  const double x = t - 2.0 * p.tau_pi;
  const double alpha = envelope_alpha(std::abs(x), p.t2star, c);
  const double kappa = phase_kappa(x, p.t2star, c);
  return p.offset - alpha * p.amplitude * std::cos(p.delta_sum * x + kappa + p.echo_phase);
}

double visibility_hom(double tau_pi, double sigma, double v0) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  const double x = tau_pi * sigma;
  return v0 * std::exp(-0.5 * x * x);
}

namespace {

struct ChunkSums {
  std::vector<double> w;
  std::vector<double> w2;
};

// Noise draws use a stream separate from the energy stream so the ensemble
// energies stay identical to sample_ensemble() for the same seed.
constexpr std::uint64_t kNoiseStreamSalt = 0x6e6f697365ull;
constexpr std::size_t kChunkAtoms = 4096;  // fixed so sums never depend on thread count

ChunkSums simulate_chunk(std::size_t first, std::size_t last, const SequenceSpec& seq,
                         const EnsembleSpec& ens, double delta0, double eta,
                         const HomogeneousNoise& noise, std::span<const double> times) {
  ChunkSums acc{std::vector<double>(times.size(), 0.0), std::vector<double>(times.size(), 0.0)};
  const BlochVector u0{0.0, 0.0, -1.0};
  for (std::size_t i = first; i < last; ++i) {
    const double energy = sample_energy(atom_stream_seed(ens.rng_seed, i), ens.temperature,
                                        ens.truncation_energy);
    const double delta_ls = delta_ls_of_energy(energy, delta0, eta);
    const double delta = seq.delta_synth - seq.delta_b - delta_ls;
    std::mt19937_64 noise_eng(atom_stream_seed(ens.rng_seed ^ kNoiseStreamSalt, i));
    std::normal_distribution<double> gauss(0.0, noise.sigma > 0.0 ? noise.sigma : 1.0);
    for (std::size_t k = 0; k < times.size(); ++k) {
      double w = 0.0;
      switch (seq.kind) {
        case SequenceKind::rabi:
          w = rabi_w_detuned(seq.rabi_frequency, delta, times[k]);
          break;
        case SequenceKind::ramsey:
          w = apply_program(PulseProgram::ramsey(delta, times[k], seq.phase), u0).w;
          break;
        case SequenceKind::echo: {
          const double dd = noise.sigma > 0.0 ? gauss(noise_eng) : 0.0;
          w = apply_program(
                  PulseProgram::echo(delta, delta + dd, seq.tau_pi, times[k], seq.phase), u0)
                  .w;
          break;
        }
      }
      acc.w[k] += w;
      acc.w2[k] += w * w;
    }
  }
  return acc;
}

}  // namespace

std::vector<MonteCarloPoint> monte_carlo_signal(const SequenceSpec& seq, const EnsembleSpec& ens,
                                                const TrapConfig& trap,
                                                const HomogeneousNoise& noise,
                                                std::span<const double> times,
                                                const DetectionScaling& det) {
  if (times.empty()) throw std::invalid_argument("time grid must be non-empty");
  for (const double t : times) {
    if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument("times must be finite and >= 0");
    if (seq.kind == SequenceKind::echo && t < seq.tau_pi)
      throw std::invalid_argument("echo readout times must be >= tau_pi");
  }
  if (seq.kind == SequenceKind::echo && seq.tau_pi < 0.0)
    throw std::invalid_argument("tau_pi must be >= 0");
  if (noise.sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
  if (ens.atom_count <= 0) throw std::invalid_argument("atom count must be > 0");

  const double delta0 = delta0_max(trap.depth_kelvin, trap.eta);
  const auto n_atoms = static_cast<std::size_t>(ens.atom_count);
  const std::size_t n_chunks = (n_atoms + kChunkAtoms - 1) / kChunkAtoms;
  std::vector<ChunkSums> partial(n_chunks);

  const std::size_t n_workers =
      std::min<std::size_t>(n_chunks, std::max(1u, std::thread::hardware_concurrency()));
  std::mutex queue_mutex;
  std::size_t next_chunk = 0;
  auto run_worker = [&]() {
    for (;;) {
      std::size_t c;
      {
        std::lock_guard<std::mutex> lock(queue_mutex);
        if (next_chunk >= n_chunks) return;
        c = next_chunk++;
      }
      const std::size_t first = c * kChunkAtoms;
      const std::size_t last = std::min(first + kChunkAtoms, n_atoms);
      partial[c] = simulate_chunk(first, last, seq, ens, delta0, trap.eta, noise, times);
    }
  };
  if (n_workers <= 1) {
    run_worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(run_worker);
    for (auto& th : pool) th.join();
  }

  std::vector<MonteCarloPoint> out(times.size());
  const double n = static_cast<double>(n_atoms);
  for (std::size_t k = 0; k < times.size(); ++k) {
    double sw = 0.0;
    double sw2 = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {  // fixed order keeps sums reproducible
      sw += partial[c].w[k];
      sw2 += partial[c].w2[k];
    }
    const double mean = sw / n;
    const double var = n > 1.0 ? std::max(0.0, (sw2 - n * mean * mean) / (n - 1.0)) : 0.0;
    out[k].p3 = det.offset + det.amplitude * mean;
    out[k].std_error = std::abs(det.amplitude) * std::sqrt(var / n);
  }
  return out;
}

}  // namespace dephasim
