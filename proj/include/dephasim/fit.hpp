#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dephasim/signal.hpp"

// Least-squares fringe fitting (damped Gauss-Newton with analytic Jacobians)
// and the small-sample statistics used for state detection.

namespace dephasim {

struct DataPoint {
  double t;       // s (or tau_pi for visibility data)
  double y;       // population / visibility
  double weight = 1.0;
};

struct Dataset {
  std::vector<DataPoint> points;
};

// A fit model evaluates y(t; p) and its gradient in the physical parameters.
// Parameters flagged log-scaled are kept positive by fitting their logarithm.
class FitModel {
 public:
  virtual ~FitModel() = default;
  virtual std::vector<std::string> parameter_names() const = 0;
  virtual std::vector<bool> log_scaled() const = 0;
  virtual double value(double t, std::span<const double> p) const = 0;
  virtual void gradient(double t, std::span<const double> p, std::span<double> out) const = 0;
  virtual std::vector<double> initial_guess(const Dataset& data) const = 0;
};

std::unique_ptr<FitModel> make_rabi_model();        // contrast, rabi_frequency
std::unique_ptr<FitModel> make_ramsey_model();      // amplitude, offset, delta_sum, t2star, phase
std::unique_ptr<FitModel> make_echo_model(double tau_pi);  // ... , echo_phase
std::unique_ptr<FitModel> make_visibility_model();  // v0, sigma

struct FitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;  // relative parameter step
  double ssr_tolerance = 1e-12;   // relative SSR decrease
  std::map<std::string, double> init_overrides;
};

struct FitParam {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
};

struct FitResult {
  bool converged = false;
  bool degenerate = false;  // rank-deficient or unresolvable amplitude
  int iterations = 0;
  double ssr = 0.0;
  std::vector<FitParam> params;
  std::vector<std::vector<double>> covariance;  // physical parameters
  std::optional<double> visibility;             // A/B for fringe models
  std::optional<double> visibility_error;

  const FitParam& param(const std::string& name) const;
};

// Core optimizer; `init` is in physical parameters. Phase-like parameters are
// wrapped to (-pi, pi] on output. Standard errors come from the unweighted
// residual variance unless the dataset carries weights.
FitResult fit_model(const FitModel& model, const Dataset& data, std::span<const double> init,
                    const FitOptions& opts = {});

// Heuristic-initialized fits. When overrides are given, both the overridden
// and the pure-heuristic start are tried and the lower-SSR solution wins.
FitResult fit_rabi(const Dataset& data, const FitOptions& opts = {});
FitResult fit_ramsey(const Dataset& data, const FitOptions& opts = {});
FitResult fit_echo(const Dataset& data, double tau_pi, const FitOptions& opts = {});
FitResult fit_visibility(const Dataset& data, const FitOptions& opts = {});

// Irreversible dephasing time from the echo-visibility Gaussian width:
// T2' = sqrt(2) / sigma.
double t2prime_from_sigma(double sigma);

// Fluorescence count rates to surviving-population estimate.
struct CountRates {
  double initial;
  double final_count;
  double background;
  double one_atom;
};

struct PopulationEstimate {
  double n_initial;
  double n_final;
  double p3;
  bool gain_warning;  // final exceeded initial
};

PopulationEstimate p3_from_counts(const CountRates& c);

// Exact binomial confidence interval (lower, upper) for k successes out of n.
std::pair<double, double> clopper_pearson(int successes, int trials, double confidence);

std::string format_fit_result(const FitResult& r);
std::string fit_result_key_values(const FitResult& r);

}  // namespace dephasim
