#include "dephasim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "dephasim/io.hpp"

namespace dephasim {

ConfigError::ConfigError(const std::filesystem::path& file, int line, const std::string& msg)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + msg), line_(line) {}

namespace {

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

struct RawConfig {
  std::filesystem::path file;
  std::map<std::string, Entry> entries;  // "section.key"

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto it = entries.find(section + "." + key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  double require_double(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(file, 0, "missing required key '" + key + "' in [" + section + "]");
    return as_double(*e, key);
  }

  std::optional<double> optional_double(const std::string& section,
                                        const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    return as_double(*e, key);
  }

  std::optional<std::string> optional_string(const std::string& section,
                                             const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    return e->value;
  }

  bool optional_bool(const std::string& section, const std::string& key,
                     bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    throw ConfigError(file, e->line, "key '" + key + "' must be true/false");
  }

  double as_double(const Entry& e, const std::string& key) const {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
      throw ConfigError(file, e.line, "key '" + key + "' has non-numeric value '" + e.value + "'");
    return v;
  }

  void reject_unused() const {
    for (const auto& [name, e] : entries)
      if (!e.used) throw ConfigError(file, e.line, "unrecognized key '" + name + "'");
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

RawConfig parse_raw(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, 0, "cannot open config file");
  RawConfig cfg;
  cfg.file = file;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(file, lineno, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(file, lineno, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(file, lineno, "expected 'key = value' or '[section]'");
    if (section.empty()) throw ConfigError(file, lineno, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(file, lineno, "empty key");
    const std::string full = section + "." + key;
    if (cfg.entries.count(full)) throw ConfigError(file, lineno, "duplicate key '" + full + "'");
    cfg.entries[full] = Entry{value, lineno};
  }
  return cfg;
}

// [trap]: depth via depth_mk or delta0_hz (exactly one); optional eta and
// wavelength override the 1064 nm cesium defaults.
TrapConfig parse_trap(const RawConfig& raw) {
  const auto depth_mk = raw.optional_double("trap", "depth_mk");
  const auto delta0_hz = raw.optional_double("trap", "delta0_hz");
  if (depth_mk.has_value() == delta0_hz.has_value())
    throw ConfigError(raw.file, 0, "[trap] needs exactly one of depth_mk / delta0_hz");
  const double eta = raw.optional_double("trap", "eta").value_or(kEtaCesium1064);
  if (!(eta > 0.0)) throw ConfigError(raw.file, 0, "[trap] eta must be > 0");

  double depth_kelvin = 0.0;
  if (depth_mk) {
    depth_kelvin = *depth_mk * 1e-3;
  } else {
    depth_kelvin = depth_from_delta0(kTwoPi * *delta0_hz, eta);
  }
  if (!(depth_kelvin > 0.0)) throw ConfigError(raw.file, 0, "[trap] depth must be > 0");

  TrapConfig trap = TrapConfig::cesium(depth_kelvin);
  trap.eta = eta;
  if (const auto wl = raw.optional_double("trap", "wavelength_nm"))
    trap.laser_wavelength = *wl * 1e-9;
  if (const auto ri = raw.optional_double("trap", "relative_intensity"))
    trap.relative_intensity = *ri;
  return trap;
}

EnsembleSpec parse_ensemble(const RawConfig& raw, const TrapConfig& trap) {
  const auto temp_uk = raw.optional_double("ensemble", "temperature_uk");
  const auto t2star_ms = raw.optional_double("ensemble", "t2star_ms");
  if (temp_uk.has_value() == t2star_ms.has_value())
    throw ConfigError(raw.file, 0,
                      "[ensemble] needs exactly one of temperature_uk / t2star_ms");
  EnsembleSpec ens;
  ens.temperature =
      temp_uk ? *temp_uk * 1e-6 : temperature_from_t2star(*t2star_ms * 1e-3, trap.eta);
  if (!(ens.temperature > 0.0))
    throw ConfigError(raw.file, 0, "[ensemble] temperature must be > 0");
  const double atoms = raw.require_double("ensemble", "atoms");
  if (atoms < 1.0 || atoms != std::floor(atoms))
    throw ConfigError(raw.file, 0, "[ensemble] atoms must be a positive integer");
  ens.atom_count = static_cast<int>(atoms);
  ens.rng_seed = static_cast<std::uint64_t>(
      raw.optional_double("ensemble", "seed").value_or(0.0));
  if (raw.optional_bool("ensemble", "truncate_at_depth", false))
    ens.truncation_energy = trap.depth_kelvin;
  return ens;
}

SequenceSpec parse_sequence(const RawConfig& raw, const AtomParams& atom) {
  SequenceSpec seq;
  const auto kind = raw.optional_string("sequence", "kind");
  if (!kind) throw ConfigError(raw.file, 0, "missing required key 'kind' in [sequence]");
  if (*kind == "rabi") {
    seq.kind = SequenceKind::rabi;
  } else if (*kind == "ramsey") {
    seq.kind = SequenceKind::ramsey;
  } else if (*kind == "echo") {
    seq.kind = SequenceKind::echo;
  } else {
    throw ConfigError(raw.file, 0, "[sequence] kind must be rabi, ramsey or echo");
  }

  const auto delta_b_hz = raw.optional_double("sequence", "delta_b_hz");
  const auto b_field_ut = raw.optional_double("sequence", "b_field_ut");
  if (delta_b_hz && b_field_ut)
    throw ConfigError(raw.file, 0, "[sequence] give delta_b_hz or b_field_ut, not both");
  if (delta_b_hz) seq.delta_b = kTwoPi * *delta_b_hz;
  if (b_field_ut) seq.delta_b = zeeman_offset(*b_field_ut * 1e-6, atom.quad_zeeman_hz_per_t2);

  if (seq.kind == SequenceKind::rabi) {
    seq.rabi_frequency = kTwoPi * 1e3 * raw.require_double("sequence", "rabi_khz");
  } else {
    seq.delta_synth = kTwoPi * raw.require_double("sequence", "delta_synth_hz");
  }
  if (seq.kind == SequenceKind::echo) {
    seq.tau_pi = 1e-3 * raw.require_double("sequence", "tau_pi_ms");
    if (seq.tau_pi < 0.0) throw ConfigError(raw.file, 0, "[sequence] tau_pi_ms must be >= 0");
  }
  seq.phase = raw.optional_double("sequence", "phase_rad").value_or(0.0);
  return seq;
}

std::vector<double> parse_times(const RawConfig& raw) {
  const double start = 1e-3 * raw.require_double("sequence", "t_start_ms");
  const double stop = 1e-3 * raw.require_double("sequence", "t_stop_ms");
  const double points = raw.require_double("sequence", "t_points");
  if (points < 1.0 || points != std::floor(points))
    throw ConfigError(raw.file, 0, "[sequence] t_points must be a positive integer");
  if (stop < start) throw ConfigError(raw.file, 0, "[sequence] t_stop_ms must be >= t_start_ms");
  const auto n = static_cast<std::size_t>(points);
  if (n > 1 && stop == start)
    throw ConfigError(raw.file, 0, "[sequence] time grid must be strictly increasing");
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i)
    times[i] = n == 1 ? start
                      : start + (stop - start) * static_cast<double>(i) /
                                    static_cast<double>(n - 1);
  return times;
}

}  // namespace

ScenarioConfig load_scenario(const std::filesystem::path& file) {
  const RawConfig raw = parse_raw(file);
  ScenarioConfig cfg;
  cfg.atom = cesium();
  cfg.trap = parse_trap(raw);
  cfg.ensemble = parse_ensemble(raw, cfg.trap);
  cfg.sequence = parse_sequence(raw, cfg.atom);
  cfg.times = parse_times(raw);
  cfg.noise.sigma = kTwoPi * raw.optional_double("noise", "sigma_hz").value_or(0.0);
  if (cfg.noise.sigma < 0.0) throw ConfigError(file, 0, "[noise] sigma_hz must be >= 0");
  cfg.detection.amplitude = raw.require_double("detection", "a");
  cfg.detection.offset = raw.require_double("detection", "b");
  raw.reject_unused();
  return cfg;
}

BudgetConfig load_budget(const std::filesystem::path& file) {
  const RawConfig raw = parse_raw(file);
  BudgetConfig cfg;
  cfg.atom = cesium();
  cfg.trap = parse_trap(raw);
  BudgetInputs& in = cfg.inputs;

  if (const auto s = raw.optional_double("budget", "sigma_exp_hz")) in.sigma_exp = kTwoPi * *s;
  if (const auto t = raw.optional_double("budget", "t2prime_ms")) in.t2prime = *t * 1e-3;

  const auto dir = file.parent_path();
  auto series = [&](const char* key) -> std::optional<TimeSeries> {
    if (const auto p = raw.optional_string("budget", key))
      return load_timeseries(dir / *p);  // paths are relative to the config file
    return std::nullopt;
  };
  in.intensity_sigma_a = raw.optional_double("budget", "intensity_sigma_a");
  in.intensity_series = series("intensity_series");
  in.pointing_best_sigma_a = raw.optional_double("budget", "pointing_best_sigma_a");
  in.pointing_best_series = series("pointing_best_series");
  in.pointing_worst_sigma_a = raw.optional_double("budget", "pointing_worst_sigma_a");
  in.pointing_worst_series = series("pointing_worst_series");

  const auto heating_rate = raw.optional_double("budget", "heating_rate_mk_s");
  const auto temp_uk = raw.optional_double("budget", "temperature_uk");
  if (heating_rate) {
    if (!temp_uk)
      throw ConfigError(file, 0, "[budget] heating_rate_mk_s needs temperature_uk");
    HeatingModel h;
    h.heating_rate = *heating_rate * 1e-3;
    h.temperature = *temp_uk * 1e-6;
    h.dimension =
        static_cast<int>(raw.optional_double("budget", "heating_dim").value_or(3.0));
    in.heating = h;
  }

  if (const auto gs = raw.optional_double("budget", "gamma_s")) {
    if (!temp_uk) throw ConfigError(file, 0, "[budget] gamma_s needs temperature_uk");
    in.photon = BudgetInputs::PhotonRecoil{*temp_uk * 1e-6, *gs};
  }

  const auto b0 = raw.optional_double("budget", "b0_ut");
  const auto db = raw.optional_double("budget", "db_ut");
  if (b0.has_value() != db.has_value())
    throw ConfigError(file, 0, "[budget] magnetic row needs both b0_ut and db_ut");
  if (b0)
    in.magnetic = BudgetInputs::Magnetic{
        *b0 * 1e-6, *db * 1e-6, raw.optional_double("budget", "line_freq_hz").value_or(50.0)};

  for (const char* name : {"measured", "intensity", "pointing best", "pointing worst",
                           "heating", "photon recoil", "magnetic"}) {
    std::string key = std::string("ref_") + name + "_hz";
    for (auto& c : key)
      if (c == ' ') c = '_';
    if (const auto v = raw.optional_double("budget", key))
      in.references.emplace_back(name, kTwoPi * *v);
  }

  raw.reject_unused();
  return cfg;
}

}  // namespace dephasim
