#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dephasim/noise.hpp"
#include "dephasim/signal.hpp"
#include "dephasim/trap.hpp"

// Scenario files: line-oriented `key = value` pairs grouped in [sections],
// '#' starts a comment. Keys carry their unit as a suffix (tau_pi_ms,
// delta_synth_hz, ...); everything is converted to SI / angular units here so
// the rest of the code never sees config units.

namespace dephasim {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::filesystem::path& file, int line, const std::string& msg);
  int line() const { return line_; }

 private:
  int line_;
};

struct ScenarioConfig {
  TrapConfig trap;
  AtomParams atom;
  EnsembleSpec ensemble;
  SequenceSpec sequence;
  HomogeneousNoise noise;
  DetectionScaling detection;
  std::vector<double> times;  // s
};

struct BudgetConfig {
  TrapConfig trap;
  AtomParams atom;
  BudgetInputs inputs;
};

ScenarioConfig load_scenario(const std::filesystem::path& file);
BudgetConfig load_budget(const std::filesystem::path& file);

}  // namespace dephasim
