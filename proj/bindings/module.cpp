#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dephasim/bloch.hpp"
#include "dephasim/config.hpp"
#include "dephasim/fit.hpp"
#include "dephasim/io.hpp"
#include "dephasim/noise.hpp"
#include "dephasim/signal.hpp"
#include "dephasim/trap.hpp"

namespace py = pybind11;
using namespace dephasim;

PYBIND11_MODULE(_core, m) {
  m.doc() = "dephasing simulator for optically trapped hyperfine qubits";

  py::class_<AtomParams>(m, "AtomParams")
      .def_readonly("mass", &AtomParams::mass)
      .def_readonly("d1_wavelength", &AtomParams::d1_wavelength)
      .def_readonly("d2_wavelength", &AtomParams::d2_wavelength)
      .def_readonly("linewidth", &AtomParams::linewidth)
      .def_readonly("hyperfine_splitting", &AtomParams::hyperfine_splitting)
      .def_readonly("quad_zeeman_hz_per_t2", &AtomParams::quad_zeeman_hz_per_t2);
  m.def("cesium", &cesium);

  py::class_<TrapConfig>(m, "TrapConfig")
      .def_static("cesium", &TrapConfig::cesium, py::arg("depth_kelvin"))
      .def_readwrite("depth_kelvin", &TrapConfig::depth_kelvin)
      .def_readwrite("eta", &TrapConfig::eta)
      .def_readwrite("laser_wavelength", &TrapConfig::laser_wavelength);
  m.attr("ETA_CESIUM_1064") = kEtaCesium1064;

  m.def("delta0_max", &delta0_max, py::arg("depth_kelvin"), py::arg("eta"));
  m.def("depth_from_delta0", &depth_from_delta0, py::arg("delta0"), py::arg("eta"));
  m.def("t2star_from_temperature", &t2star_from_temperature, py::arg("temperature"),
        py::arg("eta"));
  m.def("temperature_from_t2star", &temperature_from_t2star, py::arg("t2star"), py::arg("eta"));
  m.def("boltzmann_pdf", &boltzmann_pdf, py::arg("energy"), py::arg("temperature"));
  m.def("delta_ls_of_energy", &delta_ls_of_energy, py::arg("energy"), py::arg("delta0"),
        py::arg("eta"));

  py::class_<LightShiftDistribution>(m, "LightShiftDistribution")
      .def_static("make", &LightShiftDistribution::from, py::arg("delta0"), py::arg("eta"),
                  py::arg("temperature"))
      .def_readonly("delta0", &LightShiftDistribution::delta0)
      .def_readonly("k_time", &LightShiftDistribution::k_time)
      .def("mode", &LightShiftDistribution::mode);
  m.def("lightshift_pdf", &lightshift_pdf, py::arg("delta_ls"), py::arg("dist"));
  m.def("lightshift_cdf", &lightshift_cdf, py::arg("delta_ls"), py::arg("dist"));

  py::class_<EnsembleSpec>(m, "EnsembleSpec")
      .def(py::init([](double temperature, int atoms, std::optional<double> truncation,
                       std::uint64_t seed) {
             return EnsembleSpec{temperature, atoms, truncation, seed};
           }),
           py::arg("temperature"), py::arg("atoms"), py::arg("truncation_energy") = py::none(),
           py::arg("seed") = 0)
      .def_readwrite("temperature", &EnsembleSpec::temperature)
      .def_readwrite("atom_count", &EnsembleSpec::atom_count)
      .def_readwrite("rng_seed", &EnsembleSpec::rng_seed);
  m.def("sample_ensemble", &sample_ensemble, py::arg("ensemble"));

  m.def("p3_from_w", &p3_from_w);
  m.def("w_from_p3", &w_from_p3);
  m.def("rabi_p3", &rabi_p3, py::arg("rabi_frequency"), py::arg("t"), py::arg("contrast"));
  m.def("rabi_w_detuned", &rabi_w_detuned, py::arg("rabi_frequency"), py::arg("detuning"),
        py::arg("t"));
  m.def("echo_w_perturbed", &echo_w_perturbed, py::arg("delta_diff"), py::arg("tau_pi"));
  m.def("pulse_phase_offset", &pulse_phase_offset, py::arg("t_half_pi"), py::arg("delta_sum"));

  m.def("envelope_alpha", [](double t, double t2star) { return envelope_alpha(t, t2star); },
        py::arg("t"), py::arg("t2star"));
  m.def("phase_kappa", [](double t, double t2star) { return phase_kappa(t, t2star); },
        py::arg("t"), py::arg("t2star"));
  m.def("visibility_hom", &visibility_hom, py::arg("tau_pi"), py::arg("sigma"),
        py::arg("v0") = 1.0);

  py::class_<RamseyParams>(m, "RamseyParams")
      .def(py::init([](double a, double b, double d, double t2, double phi) {
             return RamseyParams{a, b, d, t2, phi};
           }),
           py::arg("amplitude"), py::arg("offset"), py::arg("delta_sum"), py::arg("t2star"),
           py::arg("phase_offset") = 0.0)
      .def_readwrite("amplitude", &RamseyParams::amplitude)
      .def_readwrite("offset", &RamseyParams::offset)
      .def_readwrite("delta_sum", &RamseyParams::delta_sum)
      .def_readwrite("t2star", &RamseyParams::t2star)
      .def_readwrite("phase_offset", &RamseyParams::phase_offset);
  m.def("ramsey_p3", [](double t, const RamseyParams& p) { return ramsey_p3(t, p); },
        py::arg("t"), py::arg("params"));

  py::class_<EchoParams>(m, "EchoParams")
      .def(py::init([](double a, double b, double d, double t2, double tau, double psi) {
             return EchoParams{a, b, d, t2, tau, psi};
           }),
           py::arg("amplitude"), py::arg("offset"), py::arg("delta_sum"), py::arg("t2star"),
           py::arg("tau_pi"), py::arg("echo_phase") = 0.0)
      .def_readwrite("amplitude", &EchoParams::amplitude)
      .def_readwrite("offset", &EchoParams::offset)
      .def_readwrite("delta_sum", &EchoParams::delta_sum)
      .def_readwrite("t2star", &EchoParams::t2star)
      .def_readwrite("tau_pi", &EchoParams::tau_pi)
      .def_readwrite("echo_phase", &EchoParams::echo_phase);
  m.def("echo_p3", [](double t, const EchoParams& p) { return echo_p3(t, p); }, py::arg("t"),
        py::arg("params"));

  py::enum_<SequenceKind>(m, "SequenceKind")
      .value("rabi", SequenceKind::rabi)
      .value("ramsey", SequenceKind::ramsey)
      .value("echo", SequenceKind::echo);

  py::class_<SequenceSpec>(m, "SequenceSpec")
      .def(py::init<>())
      .def_readwrite("kind", &SequenceSpec::kind)
      .def_readwrite("delta_synth", &SequenceSpec::delta_synth)
      .def_readwrite("delta_b", &SequenceSpec::delta_b)
      .def_readwrite("tau_pi", &SequenceSpec::tau_pi)
      .def_readwrite("phase", &SequenceSpec::phase)
      .def_readwrite("rabi_frequency", &SequenceSpec::rabi_frequency);

  py::class_<MonteCarloPoint>(m, "MonteCarloPoint")
      .def_readonly("p3", &MonteCarloPoint::p3)
      .def_readonly("std_error", &MonteCarloPoint::std_error);

  m.def(
      "monte_carlo_signal",
      [](const SequenceSpec& seq, const EnsembleSpec& ens, const TrapConfig& trap,
         double noise_sigma, const std::vector<double>& times, double amplitude, double offset) {
        return monte_carlo_signal(seq, ens, trap, HomogeneousNoise{noise_sigma}, times,
                                  DetectionScaling{amplitude, offset});
      },
      py::arg("sequence"), py::arg("ensemble"), py::arg("trap"), py::arg("noise_sigma"),
      py::arg("times"), py::arg("amplitude"), py::arg("offset"),
      py::call_guard<py::gil_scoped_release>());

  py::class_<TimeSeries>(m, "TimeSeries")
      .def(py::init([](double dt, std::vector<double> values) {
             return TimeSeries{dt, std::move(values)};
           }),
           py::arg("sample_interval"), py::arg("values"))
      .def_readwrite("sample_interval", &TimeSeries::sample_interval)
      .def_readwrite("values", &TimeSeries::values);
  m.def("allan_deviation", &allan_deviation, py::arg("series"), py::arg("tau"));
  m.def("sigma_from_allan", &sigma_from_allan, py::arg("allan_dev"), py::arg("delta0"));

  py::class_<HeatingModel>(m, "HeatingModel")
      .def(py::init([](double rate, double temperature, int dimension) {
             return HeatingModel{rate, temperature, dimension};
           }),
           py::arg("heating_rate"), py::arg("temperature"), py::arg("dimension") = 3);
  m.def("heating_sigma", &heating_sigma, py::arg("model"), py::arg("t2prime"), py::arg("eta"));
  m.def("photon_recoil_sigma", &photon_recoil_sigma, py::arg("temperature"),
        py::arg("scattering_rate"), py::arg("tau_pi"), py::arg("wavelength"), py::arg("mass"),
        py::arg("eta"));
  m.def("zeeman_offset", &zeeman_offset, py::arg("b0"), py::arg("quad_coeff"));
  m.def("magnetic_shift", &magnetic_shift, py::arg("b0"), py::arg("delta_b"),
        py::arg("quad_coeff"));
  m.def("magnetic_sigma", &magnetic_sigma, py::arg("tau"), py::arg("delta_omega"),
        py::arg("line_freq") = 50.0);
  m.def("microwave_jitter", &microwave_jitter, py::arg("rel_amplitude"),
        py::arg("rel_duration"));
  m.def("raman_suppression_beta",
        [](double wavelength) { return raman_suppression_beta(wavelength); },
        py::arg("trap_wavelength"));
  m.def("t1_from_scattering", &t1_from_scattering, py::arg("scattering_rate"), py::arg("beta"));
  m.def("t2prime_from_sigma", &t2prime_from_sigma, py::arg("sigma"));

  py::class_<FitParam>(m, "FitParam")
      .def_readonly("name", &FitParam::name)
      .def_readonly("value", &FitParam::value)
      .def_readonly("std_error", &FitParam::std_error);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("degenerate", &FitResult::degenerate)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("ssr", &FitResult::ssr)
      .def_readonly("params", &FitResult::params)
      .def_readonly("visibility", &FitResult::visibility)
      .def_readonly("visibility_error", &FitResult::visibility_error)
      .def("param", &FitResult::param, py::return_value_policy::copy);

  auto make_dataset = [](const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size()) throw std::invalid_argument("t and y lengths differ");
    Dataset d;
    for (std::size_t i = 0; i < t.size(); ++i) d.points.push_back({t[i], y[i], 1.0});
    return d;
  };
  py::class_<Dataset>(m, "Dataset").def(py::init(make_dataset), py::arg("t"), py::arg("y"));

  auto opts_from = [](const std::map<std::string, double>& overrides) {
    FitOptions o;
    o.init_overrides = overrides;
    return o;
  };
  m.def(
      "fit_rabi",
      [opts_from](const Dataset& d, const std::map<std::string, double>& init) {
        return fit_rabi(d, opts_from(init));
      },
      py::arg("data"), py::arg("init") = std::map<std::string, double>{});
  m.def(
      "fit_ramsey",
      [opts_from](const Dataset& d, const std::map<std::string, double>& init) {
        return fit_ramsey(d, opts_from(init));
      },
      py::arg("data"), py::arg("init") = std::map<std::string, double>{});
  m.def(
      "fit_echo",
      [opts_from](const Dataset& d, double tau_pi, const std::map<std::string, double>& init) {
        return fit_echo(d, tau_pi, opts_from(init));
      },
      py::arg("data"), py::arg("tau_pi"), py::arg("init") = std::map<std::string, double>{});
  m.def(
      "fit_visibility",
      [opts_from](const Dataset& d, const std::map<std::string, double>& init) {
        return fit_visibility(d, opts_from(init));
      },
      py::arg("data"), py::arg("init") = std::map<std::string, double>{});

  m.def("clopper_pearson", &clopper_pearson, py::arg("successes"), py::arg("trials"),
        py::arg("confidence"));

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def_readonly("trap", &ScenarioConfig::trap)
      .def_readonly("ensemble", &ScenarioConfig::ensemble)
      .def_readonly("sequence", &ScenarioConfig::sequence)
      .def_readonly("times", &ScenarioConfig::times);
  m.def("load_scenario", &load_scenario, py::arg("path"));

  py::class_<BudgetReport>(m, "BudgetReport")
      .def_readonly("t2prime", &BudgetReport::t2prime)
      .def_readonly("total_best", &BudgetReport::total_best)
      .def_readonly("total_worst", &BudgetReport::total_worst);
  m.def(
      "budget_report_from_config",
      [](const std::filesystem::path& path) {
        const BudgetConfig cfg = load_budget(path);
        return budget_report(cfg.trap, cfg.atom, cfg.inputs);
      },
      py::arg("path"));
  m.def("format_budget_table",
        [](const BudgetReport& r) { return format_budget_table(r); });
}
