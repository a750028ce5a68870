#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dephasim/bloch.hpp"
#include "dephasim/config.hpp"
#include "dephasim/fit.hpp"
#include "dephasim/io.hpp"
#include "dephasim/noise.hpp"
#include "dephasim/signal.hpp"
#include "dephasim/trap.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;

using namespace dephasim;

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_path) {
  ScenarioConfig cfg = load_scenario(config_path);
  if (seed) cfg.ensemble.rng_seed = *seed;

  if (!virial_regime_ok(cfg.ensemble.temperature, cfg.trap.depth_kelvin))
    std::cerr << "warning: kB*T above U0/4; the time-averaged light-shift model "
                 "is marginal for this temperature\n";

  const double delta0 = delta0_max(cfg.trap.depth_kelvin, cfg.trap.eta);
  const double t2star = t2star_from_temperature(cfg.ensemble.temperature, cfg.trap.eta);
  const double delta_sum = cfg.sequence.delta_synth - cfg.sequence.delta_b - delta0;

  std::vector<double> analytic(cfg.times.size());
  for (std::size_t i = 0; i < cfg.times.size(); ++i) {
    const double t = cfg.times[i];
    switch (cfg.sequence.kind) {
      case SequenceKind::rabi:
        analytic[i] = cfg.detection.offset -
                      cfg.detection.amplitude * std::cos(cfg.sequence.rabi_frequency * t);
        break;
      case SequenceKind::ramsey:
        analytic[i] = ramsey_p3(t, RamseyParams{cfg.detection.amplitude, cfg.detection.offset,
                                                delta_sum, t2star, cfg.sequence.phase});
        break;
      case SequenceKind::echo:
        analytic[i] =
            echo_p3(t, EchoParams{cfg.detection.amplitude, cfg.detection.offset, delta_sum,
                                  t2star, cfg.sequence.tau_pi, cfg.sequence.phase});
        break;
    }
  }

  const auto mc = monte_carlo_signal(cfg.sequence, cfg.ensemble, cfg.trap, cfg.noise, cfg.times,
                                     cfg.detection);

  std::vector<std::vector<double>> rows(cfg.times.size());
  for (std::size_t i = 0; i < cfg.times.size(); ++i)
    rows[i] = {cfg.times[i], analytic[i], mc[i].p3, mc[i].std_error};
  write_csv(out_path, {"t_s", "p3_analytic", "p3_montecarlo", "mc_stderr"}, rows);

  std::cout << "delta0/2pi = " << delta0 / kTwoPi << " Hz, T2* = " << t2star * 1e3 << " ms";
  if (cfg.sequence.kind != SequenceKind::rabi)
    std::cout << ", fringe detuning/2pi = " << delta_sum / kTwoPi << " Hz";
  std::cout << "\n"
            << cfg.times.size() << " points x " << cfg.ensemble.atom_count
            << " atoms (seed " << cfg.ensemble.rng_seed << ") -> " << out_path << "\n";
  return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& model,
            std::optional<double> tau_pi_ms, const std::optional<std::string>& column,
            const std::vector<std::string>& init_kv, const std::optional<std::string>& out_path) {
  FitOptions opts;
  for (const auto& kv : init_kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--init expects name=value, got '" + kv + "'");
    opts.init_overrides[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }

  const Dataset data = load_dataset(data_path, column);
  for (const auto& p : data.points)
    if (model != "visibility" && (p.y < 0.0 || p.y > 1.0)) {
      std::cerr << "warning: population values outside [0, 1] in " << data_path << "\n";
      break;
    }

  FitResult result;
  std::optional<double> t2prime, t2prime_err;
  if (model == "rabi") {
    result = fit_rabi(data, opts);
  } else if (model == "ramsey") {
    result = fit_ramsey(data, opts);
  } else if (model == "echo") {
    if (!tau_pi_ms) throw std::invalid_argument("--tau-pi-ms is required for the echo model");
    result = fit_echo(data, *tau_pi_ms * 1e-3, opts);
  } else if (model == "visibility") {
    result = fit_visibility(data, opts);
    const auto& sig = result.param("sigma");
    if (sig.value > 0.0) {
      t2prime = t2prime_from_sigma(sig.value);
      t2prime_err = std::sqrt(2.0) * sig.std_error / (sig.value * sig.value);
    }
  } else {
    throw std::invalid_argument("unknown model '" + model +
                                "' (expected rabi, ramsey, echo or visibility)");
  }

  std::cout << format_fit_result(result);
  if (t2prime)
    std::cout << "  T2' = sqrt(2)/sigma = " << *t2prime * 1e3 << " ms +- "
              << *t2prime_err * 1e3 << " ms\n";

  if (out_path) {
    std::ofstream out(*out_path);
    if (!out) throw std::invalid_argument("cannot open output file " + *out_path);
    out << fit_result_key_values(result);
    if (t2prime) {
      out << "t2prime.value=" << format_g17(*t2prime) << "\n";
      out << "t2prime.stderr=" << format_g17(*t2prime_err) << "\n";
    }
  }
  return result.converged ? kExitOk : kExitNoConvergence;
}

int cmd_budget(const std::string& config_path, const std::optional<std::string>& out_path,
               const std::optional<std::string>& vis_path) {
  const BudgetConfig cfg = load_budget(config_path);
  const BudgetReport rep = budget_report(cfg.trap, cfg.atom, cfg.inputs);
  std::cout << format_budget_table(rep);

  if (out_path) {
    std::ofstream out(*out_path);
    if (!out) throw std::invalid_argument("cannot open output file " + *out_path);
    out << "mechanism,sigma_hz,source,ref_hz\n";
    for (const auto& e : rep.entries) {
      out << e.mechanism << "," << format_g17(e.sigma / kTwoPi) << ","
          << (e.provenance == Provenance::measured ? "measured" : "model") << ",";
      if (e.reference_sigma) out << format_g17(*e.reference_sigma / kTwoPi);
      out << "\n";
    }
    if (rep.total_best) out << "total best," << format_g17(*rep.total_best / kTwoPi) << ",,\n";
    if (rep.total_worst) out << "total worst," << format_g17(*rep.total_worst / kTwoPi) << ",,\n";
  }

  if (vis_path) {
    // Constant-sigma visibility prediction for overlay on echo-decay data.
    double sigma = 0.0;
    if (cfg.inputs.sigma_exp) {
      sigma = *cfg.inputs.sigma_exp;
    } else if (rep.total_worst) {
      sigma = *rep.total_worst;
    } else {
      throw std::invalid_argument("visibility curve needs sigma_exp or model mechanisms");
    }
    std::vector<std::vector<double>> rows;
    const int n = 121;
    for (int i = 0; i < n; ++i) {
      const double tau = 3.0 * rep.t2prime * i / (n - 1.0);
      rows.push_back({tau, 2.0 * tau, visibility_hom(tau, sigma)});
    }
    write_csv(*vis_path, {"tau_pi_s", "total_time_s", "v"}, rows);
  }
  return kExitOk;
}

int cmd_allan(const std::string& series_path, const std::vector<double>& tau_ms,
              const std::optional<std::string>& out_path) {
  const TimeSeries series = load_timeseries(series_path);
  std::vector<double> taus;
  if (!tau_ms.empty()) {
    for (const double t : tau_ms) taus.push_back(t * 1e-3);
  } else {
    // octave-spaced taus keeping at least 4 windows
    for (std::size_t nper = 1; series.values.size() / nper >= 4; nper *= 2)
      taus.push_back(static_cast<double>(nper) * series.sample_interval);
  }
  std::vector<std::vector<double>> rows;
  for (const double tau : taus) rows.push_back({tau, allan_deviation(series, tau)});
  if (out_path) {
    write_csv(*out_path, {"tau_s", "sigma_a"}, rows);
  } else {
    std::cout << "tau_s,sigma_a\n";
    for (const auto& r : rows) std::cout << format_g17(r[0]) << "," << format_g17(r[1]) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dephasing simulator and noise-budget toolkit for optically trapped qubits"};
  app.require_subcommand(1);

  std::string config_path, data_path, series_path, out_path, model;
  std::optional<std::string> opt_out, opt_column, opt_vis;
  std::optional<double> tau_pi_ms;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> init_kv;
  std::vector<double> tau_ms;

  auto* sim = app.add_subcommand("simulate", "synthesize fringe data from a scenario config");
  sim->add_option("--config", config_path, "scenario config file")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Monte Carlo seed (overrides config and DEPHASIM_SEED)")
      ->envname("DEPHASIM_SEED");
  sim->add_option("--out", out_path, "output CSV path")->required();

  auto* fit = app.add_subcommand("fit", "fit a fringe/visibility model to a dataset");
  fit->add_option("--data", data_path, "input CSV (t_s,p3[,weight])")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--model", model, "rabi | ramsey | echo | visibility")->required();
  fit->add_option("--tau-pi-ms", tau_pi_ms, "pi-pulse time for the echo model");
  fit->add_option("--column", opt_column, "value column to fit (default p3/v/p3_analytic)");
  fit->add_option("--init", init_kv, "initial-guess override, name=value (repeatable)");
  fit->add_option("--out", opt_out, "write key=value fit report here");

  auto* bud = app.add_subcommand("budget", "irreversible-dephasing noise budget");
  bud->add_option("--config", config_path, "budget config file")
      ->required()
      ->check(CLI::ExistingFile);
  bud->add_option("--out", opt_out, "write budget CSV here");
  bud->add_option("--vis-out", opt_vis, "write predicted visibility curve CSV here");

  auto* al = app.add_subcommand("allan", "Allan deviation of a monitor time series");
  al->add_option("--series", series_path, "input CSV (time_s,value)")
      ->required()
      ->check(CLI::ExistingFile);
  al->add_option("--tau-ms", tau_ms, "averaging times in ms (comma separated)")
      ->delimiter(',');
  al->add_option("--out", opt_out, "output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, seed, out_path);
    if (fit->parsed()) return cmd_fit(data_path, model, tau_pi_ms, opt_column, init_kv, opt_out);
    if (bud->parsed()) return cmd_budget(config_path, opt_out, opt_vis);
    if (al->parsed()) return cmd_allan(series_path, tau_ms, opt_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
