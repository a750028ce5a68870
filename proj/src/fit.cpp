#include "dephasim/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dephasim/io.hpp"

namespace dephasim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_phase(double phi) {
  double w = std::remainder(phi, kTwoPi);
  if (w <= -std::numbers::pi) w += kTwoPi;
  return w;
}

void check_dataset(const Dataset& data, std::size_t n_params) {
  if (data.points.empty()) throw std::invalid_argument("dataset is empty");
  if (data.points.size() < n_params)
    throw std::invalid_argument("fewer data points than fit parameters");
  for (const auto& pt : data.points) {
    if (!std::isfinite(pt.t) || !std::isfinite(pt.y))
      throw std::invalid_argument("dataset contains non-finite values");
    if (!(pt.weight > 0.0)) throw std::invalid_argument("weights must be > 0");
  }
}

struct SeriesStats {
  double mean;
  double amp;  // half peak-to-peak
  double t_min;
  double t_max;
};

SeriesStats series_stats(const Dataset& d) {
  double lo = kInf, hi = -kInf, tlo = kInf, thi = -kInf, sum = 0.0;
  for (const auto& p : d.points) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
    tlo = std::min(tlo, p.t);
    thi = std::max(thi, p.t);
    sum += p.y;
  }
  return {sum / static_cast<double>(d.points.size()), (hi - lo) / 2.0, tlo, thi};
}

// Dominant fringe frequency (Hz) of (t, y - mean) from a dense frequency scan
// with parabolic refinement of the peak.
double periodogram_peak_hz(const std::vector<double>& ts, const std::vector<double>& ys) {
  const std::size_t n = ts.size();
  double mean = 0.0;
  for (const double y : ys) mean += y;
  mean /= static_cast<double>(n);

  double span = *std::max_element(ts.begin(), ts.end()) - *std::min_element(ts.begin(), ts.end());
  if (span <= 0.0) return 0.0;
  double dt_min = kInf;
  std::vector<double> sorted = ts;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < n; ++i)
    if (sorted[i] > sorted[i - 1]) dt_min = std::min(dt_min, sorted[i] - sorted[i - 1]);
  if (!std::isfinite(dt_min)) return 0.0;

  const double f_lo = 0.5 / span;
  const double f_hi = 0.5 / dt_min;
  const int grid = 2048;
  std::vector<double> power(grid);
  int best = 0;
  for (int i = 0; i < grid; ++i) {
    const double f = f_lo + (f_hi - f_lo) * i / (grid - 1.0);
    double cc = 0.0, ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ph = kTwoPi * f * ts[j];
      cc += (ys[j] - mean) * std::cos(ph);
      ss += (ys[j] - mean) * std::sin(ph);
    }
    power[i] = cc * cc + ss * ss;
    if (power[i] > power[best]) best = i;
  }
  double refine = 0.0;
  if (best > 0 && best + 1 < grid) {
    const double denom = power[best - 1] - 2.0 * power[best] + power[best + 1];
    if (denom < 0.0) refine = 0.5 * (power[best - 1] - power[best + 1]) / denom;
  }
  return f_lo + (f_hi - f_lo) * (best + refine) / (grid - 1.0);
}

// Envelope half-life of |y - offset| over |x|; returns a T2* guess.
double estimate_t2star(std::vector<std::pair<double, double>> abs_points, double amp) {
  if (amp <= 0.0 || abs_points.empty()) return 1.0;
  std::sort(abs_points.begin(), abs_points.end());
  const double x_max = abs_points.back().first;
  if (x_max <= 0.0) return 1.0;
  constexpr int kBuckets = 8;
  for (int b = 0; b < kBuckets; ++b) {
    const double x0 = x_max * b / kBuckets;
    const double x1 = x_max * (b + 1) / kBuckets;
    double peak = 0.0;
    for (const auto& [x, r] : abs_points)
      if (x >= x0 && x <= x1) peak = std::max(peak, r);
    if (peak < amp / 2.0) {
      const double t_half = std::max(0.5 * (x0 + x1), x_max / (2.0 * kBuckets));
      return t_half / 0.787;  // alpha(t) = 1/2 at t/T2* ~ 0.787
    }
  }
  return x_max;  // envelope never halved; decay slower than the window
}

class RabiModel final : public FitModel {
 public:
  std::vector<std::string> parameter_names() const override {
    return {"contrast", "rabi_frequency"};
  }
  std::vector<bool> log_scaled() const override { return {false, true}; }
  double value(double t, std::span<const double> p) const override {
    return p[0] / 2.0 * (1.0 - std::cos(p[1] * t));
  }
  void gradient(double t, std::span<const double> p, std::span<double> out) const override {
    out[0] = (1.0 - std::cos(p[1] * t)) / 2.0;
    out[1] = p[0] / 2.0 * t * std::sin(p[1] * t);
  }
  std::vector<double> initial_guess(const Dataset& d) const override {
    const auto st = series_stats(d);
    std::vector<double> ts, ys;
    for (const auto& p : d.points) ts.push_back(p.t), ys.push_back(p.y);
    double f = periodogram_peak_hz(ts, ys);
    if (f <= 0.0) f = 1.0 / std::max(st.t_max - st.t_min, 1e-12);
    return {2.0 * st.amp, kTwoPi * f};
  }
};

class RamseyModel final : public FitModel {
 public:
  std::vector<std::string> parameter_names() const override {
    return {"amplitude", "offset", "delta_sum", "t2star", "phase"};
  }
  std::vector<bool> log_scaled() const override { return {false, false, false, true, false}; }
  double value(double t, std::span<const double> p) const override {
    return ramsey_p3(t, unpack(p));
  }
  void gradient(double t, std::span<const double> p, std::span<double> out) const override {
    fringe_gradient(t, p, out, +1.0);
  }
  std::vector<double> initial_guess(const Dataset& d) const override {
    return fringe_guess(d, 0.0);
  }

  static RamseyParams unpack(std::span<const double> p) {
    return RamseyParams{p[0], p[1], p[2], p[3], p[4]};
  }

  // Shared with the echo model: sign = +1 for B + alpha A cos, -1 for B - ...,
  // with t already shifted to the fringe coordinate.
  static void fringe_gradient(double t, std::span<const double> p, std::span<double> out,
                              double sign) {
    const auto c = EnvelopeCoeffs::exact();
    const double t2s = p[3];
    const double y = t / t2s;
    const double base = 1.0 + c.curvature * y * y;
    const double alpha = std::pow(base, -1.5);
    const double theta = p[2] * t - 3.0 * std::atan(c.slope * y) + p[4];
    const double cth = std::cos(theta);
    const double sth = std::sin(theta);
    const double dalpha = 3.0 * c.curvature * y * y / t2s * std::pow(base, -2.5);
    const double dkappa = 3.0 * c.slope * y / (t2s * (1.0 + c.slope * c.slope * y * y));
    out[0] = sign * alpha * cth;
    out[1] = 1.0;
    out[2] = -sign * alpha * p[0] * t * sth;
    out[3] = sign * p[0] * (dalpha * cth - alpha * sth * dkappa);
    out[4] = -sign * alpha * p[0] * sth;
  }

  static std::vector<double> fringe_guess(const Dataset& d, double t_shift) {
    SeriesStats st = series_stats(d);
    std::vector<double> ts, ys;
    std::vector<std::pair<double, double>> abs_points;
    for (const auto& p : d.points) {
      const double x = p.t - t_shift;
      ts.push_back(x);
      ys.push_back(p.y);
      abs_points.emplace_back(std::abs(x), std::abs(p.y - st.mean));
    }
    double f = periodogram_peak_hz(ts, ys);
    if (f <= 0.0) f = 0.5 / std::max(st.t_max - st.t_min, 1e-12);
    const double amp = std::max(st.amp, 1e-6);
    return {amp, st.mean, kTwoPi * f, estimate_t2star(abs_points, amp), 0.0};
  }
};

class EchoModel final : public FitModel {
 public:
  explicit EchoModel(double tau_pi) : tau_pi_(tau_pi) {
    if (tau_pi < 0.0) throw std::invalid_argument("tau_pi must be >= 0");
  }
  std::vector<std::string> parameter_names() const override {
    return {"amplitude", "offset", "delta_sum", "t2star", "echo_phase"};
  }
  std::vector<bool> log_scaled() const override { return {false, false, false, true, false}; }
  double value(double t, std::span<const double> p) const override {
    return echo_p3(t, EchoParams{p[0], p[1], p[2], p[3], tau_pi_, p[4]});
  }
  void gradient(double t, std::span<const double> p, std::span<double> out) const override {
    RamseyModel::fringe_gradient(t - 2.0 * tau_pi_, p, out, -1.0);
  }
  std::vector<double> initial_guess(const Dataset& d) const override {
    auto g = RamseyModel::fringe_guess(d, 2.0 * tau_pi_);
    return g;
  }

 private:
  double tau_pi_;
};

class VisibilityModel final : public FitModel {
 public:
  std::vector<std::string> parameter_names() const override { return {"v0", "sigma"}; }
  std::vector<bool> log_scaled() const override { return {false, true}; }
  double value(double t, std::span<const double> p) const override {
    const double x = t * p[1];
    return p[0] * std::exp(-0.5 * x * x);
  }
  void gradient(double t, std::span<const double> p, std::span<double> out) const override {
    const double x = t * p[1];
    const double e = std::exp(-0.5 * x * x);
    out[0] = e;
    out[1] = -p[0] * t * t * p[1] * e;
  }
  std::vector<double> initial_guess(const Dataset& d) const override {
    double v0 = -kInf, t_max = 0.0;
    for (const auto& p : d.points) {
      v0 = std::max(v0, p.y);
      t_max = std::max(t_max, std::abs(p.t));
    }
    double sigma = 0.0;
    for (const auto& p : d.points)
      if (p.y < v0 / std::numbers::e && p.t > 0.0) {
        sigma = std::sqrt(2.0) / p.t;
        break;
      }
    if (sigma == 0.0) sigma = 0.5 * std::sqrt(2.0) / std::max(t_max, 1e-12);
    return {std::max(v0, 1e-9), sigma};
  }
};

std::vector<double> to_internal(std::span<const double> p, const std::vector<bool>& logs) {
  std::vector<double> q(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (logs[j]) {
      if (!(p[j] > 0.0))
        throw std::invalid_argument("log-scaled parameter must start positive");
      q[j] = std::log(p[j]);
    } else {
      q[j] = p[j];
    }
  }
  return q;
}

std::vector<double> to_physical(std::span<const double> q, const std::vector<bool>& logs) {
  std::vector<double> p(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) p[j] = logs[j] ? std::exp(q[j]) : q[j];
  return p;
}

}  // namespace

const FitParam& FitResult::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw std::invalid_argument("no fit parameter named '" + name + "'");
}

std::unique_ptr<FitModel> make_rabi_model() { return std::make_unique<RabiModel>(); }
std::unique_ptr<FitModel> make_ramsey_model() { return std::make_unique<RamseyModel>(); }
std::unique_ptr<FitModel> make_echo_model(double tau_pi) {
  return std::make_unique<EchoModel>(tau_pi);
}
std::unique_ptr<FitModel> make_visibility_model() { return std::make_unique<VisibilityModel>(); }

FitResult fit_model(const FitModel& model, const Dataset& data, std::span<const double> init,
                    const FitOptions& opts) {
  const auto names = model.parameter_names();
  const auto logs = model.log_scaled();
  const std::size_t np = names.size();
  const std::size_t n = data.points.size();
  check_dataset(data, np);
  if (init.size() != np) throw std::invalid_argument("wrong number of initial parameters");

  std::vector<double> q = to_internal(init, logs);

  auto residuals = [&](const std::vector<double>& qv, Eigen::VectorXd& r) {
    const auto p = to_physical(qv, logs);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pt = data.points[i];
      r[static_cast<Eigen::Index>(i)] =
          std::sqrt(pt.weight) * (model.value(pt.t, p) - pt.y);
    }
    return r.squaredNorm();
  };
  auto jacobian = [&](const std::vector<double>& qv, Eigen::MatrixXd& jac) {
    const auto p = to_physical(qv, logs);
    std::vector<double> g(np);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pt = data.points[i];
      model.gradient(pt.t, p, g);
      const double sw = std::sqrt(pt.weight);
      for (std::size_t j = 0; j < np; ++j) {
        const double chain = logs[j] ? p[j] : 1.0;  // d/d log p = p * d/dp
        jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sw * g[j] * chain;
      }
    }
  };

  Eigen::VectorXd r(n), r_trial(n);
  Eigen::MatrixXd jac(n, np);
  double ssr = residuals(q, r);
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;

  for (; iter < opts.max_iterations && !converged; ++iter) {
    jacobian(q, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    const double diag_max = jtj.diagonal().maxCoeff();
    Eigen::VectorXd damp = jtj.diagonal().cwiseMax(std::max(1e-12 * diag_max, 1e-300));

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * damp;
      const Eigen::VectorXd dq = a.ldlt().solve(-g);
      std::vector<double> q_trial = q;
      for (std::size_t j = 0; j < np; ++j) q_trial[j] += dq[static_cast<Eigen::Index>(j)];
      const double ssr_trial = residuals(q_trial, r_trial);
      if (std::isfinite(ssr_trial) && ssr_trial <= ssr) {
        double qn = 0.0;
        for (const double v : q) qn += v * v;
        const double step_rel = dq.norm() / (std::sqrt(qn) + 1e-300);
        const double ssr_drop = (ssr - ssr_trial) / std::max(ssr, 1e-300);
        q = std::move(q_trial);
        r = r_trial;
        ssr = ssr_trial;
        lambda = std::max(lambda / 4.0, 1e-14);
        if (step_rel < opts.step_tolerance || ssr_drop < opts.ssr_tolerance) converged = true;
        accepted = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e14) {
          accepted = true;  // stuck; give up this iteration and report state
          iter = opts.max_iterations;
        }
      }
    }
  }

  FitResult result;
  result.converged = converged;
  result.iterations = iter;
  result.ssr = ssr;

  const auto p = to_physical(q, logs);
  jacobian(q, jac);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  Eigen::MatrixXd cov_int;
  if (lu.isInvertible()) {
    cov_int = lu.inverse();
  } else {
    cov_int = jtj.completeOrthogonalDecomposition().pseudoInverse();
    result.degenerate = true;
  }
  const double s2 = n > np ? ssr / static_cast<double>(n - np) : 0.0;
  cov_int *= s2;

  result.params.resize(np);
  result.covariance.assign(np, std::vector<double>(np, 0.0));
  for (std::size_t i = 0; i < np; ++i) {
    const double ci = logs[i] ? p[i] : 1.0;
    for (std::size_t j = 0; j < np; ++j) {
      const double cj = logs[j] ? p[j] : 1.0;
      result.covariance[i][j] =
          cov_int(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * ci * cj;
    }
  }
  // canonical fringe form: absorb a negative amplitude into a pi phase shift
  // (same curve), negating the amplitude covariance row to match
  std::vector<double> phys(p.begin(), p.end());
  std::ptrdiff_t amp = -1, ph = -1;
  for (std::size_t j = 0; j < np; ++j) {
    if (names[j] == "amplitude") amp = static_cast<std::ptrdiff_t>(j);
    if (names[j] == "phase" || names[j] == "echo_phase") ph = static_cast<std::ptrdiff_t>(j);
  }
  if (amp >= 0 && ph >= 0 && phys[static_cast<std::size_t>(amp)] < 0.0) {
    const auto a = static_cast<std::size_t>(amp);
    phys[a] = -phys[a];
    phys[static_cast<std::size_t>(ph)] += std::numbers::pi;
    for (std::size_t k = 0; k < np; ++k) {
      result.covariance[a][k] = -result.covariance[a][k];
      result.covariance[k][a] = -result.covariance[k][a];
    }
  }

  for (std::size_t j = 0; j < np; ++j) {
    result.params[j].name = names[j];
    double v = phys[j];
    if (names[j] == "phase" || names[j] == "echo_phase") v = wrap_phase(v);
    result.params[j].value = v;
    const double var = result.covariance[j][j];
    result.params[j].std_error = converged && var >= 0.0 ? std::sqrt(var) : 0.0;
    if (!std::isfinite(result.params[j].std_error)) result.degenerate = true;
  }
  return result;
}

namespace {

FitResult run_with_starts(const FitModel& model, const Dataset& data, const FitOptions& opts) {
  const auto names = model.parameter_names();
  check_dataset(data, names.size());  // before the guess heuristics touch the data
  std::vector<std::vector<double>> starts;
  const auto heuristic = model.initial_guess(data);
  if (!opts.init_overrides.empty()) {
    auto s = heuristic;
    for (const auto& [name, value] : opts.init_overrides) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end())
        throw std::invalid_argument("unknown init override parameter '" + name + "'");
      s[static_cast<std::size_t>(it - names.begin())] = value;
    }
    starts.push_back(std::move(s));
  }
  starts.push_back(heuristic);

  std::optional<FitResult> best;
  for (const auto& s : starts) {
    FitResult r = fit_model(model, data, s, opts);
    const bool better = !best || (r.converged && !best->converged) ||
                        (r.converged == best->converged && r.ssr < best->ssr);
    if (better) best = std::move(r);
  }
  return *best;
}

void attach_visibility(FitResult& r) {
  if (!r.converged) return;
  double a = 0.0, b = 0.0, va = 0.0, vb = 0.0, cab = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t j = 0; j < r.params.size(); ++j) {
    if (r.params[j].name == "amplitude") ia = j, a = r.params[j].value;
    if (r.params[j].name == "offset") ib = j, b = r.params[j].value;
  }
  if (b == 0.0) return;
  va = r.covariance[ia][ia];
  vb = r.covariance[ib][ib];
  cab = r.covariance[ia][ib];
  const double v = a / b;
  r.visibility = v;
  const double var = va / (b * b) + vb * a * a / (b * b * b * b) - 2.0 * cab * a / (b * b * b);
  r.visibility_error = var >= 0.0 ? std::sqrt(var) : 0.0;
}

}  // namespace

FitResult fit_rabi(const Dataset& data, const FitOptions& opts) {
  return run_with_starts(*make_rabi_model(), data, opts);
}

FitResult fit_ramsey(const Dataset& data, const FitOptions& opts) {
  FitResult r = run_with_starts(*make_ramsey_model(), data, opts);
  attach_visibility(r);
  return r;
}

FitResult fit_echo(const Dataset& data, double tau_pi, const FitOptions& opts) {
  FitResult r = run_with_starts(*make_echo_model(tau_pi), data, opts);
  attach_visibility(r);
  return r;
}

FitResult fit_visibility(const Dataset& data, const FitOptions& opts) {
  check_dataset(data, 2);
  // All-equal data carries no width information: report sigma = 0 with an
  // infinite-error flag instead of chasing log(sigma) to -infinity.
  double lo = kInf, hi = -kInf;
  for (const auto& p : data.points) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  if (hi - lo <= 1e-14 * std::max(std::abs(hi), 1.0)) {
    FitResult r;
    r.converged = true;
    r.degenerate = true;
    r.ssr = 0.0;
    r.params = {{"v0", (lo + hi) / 2.0, 0.0}, {"sigma", 0.0, kInf}};
    r.covariance.assign(2, std::vector<double>(2, 0.0));
    return r;
  }
  return run_with_starts(*make_visibility_model(), data, opts);
}

double t2prime_from_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  return std::sqrt(2.0) / sigma;
}

PopulationEstimate p3_from_counts(const CountRates& c) {
  if (!(c.one_atom > 0.0)) throw std::invalid_argument("one-atom count rate must be > 0");
  const double n_init = (c.initial - c.background) / c.one_atom;
  if (!(n_init > 0.0))
    throw std::invalid_argument("initial count rate does not exceed background");
  const double n_final = (c.final_count - c.background) / c.one_atom;
  return PopulationEstimate{n_init, n_final, n_final / n_init, n_final > n_init};
}

std::pair<double, double> clopper_pearson(int successes, int trials, double confidence) {
  if (trials <= 0) throw std::invalid_argument("trials must be > 0");
  if (successes < 0 || successes > trials)
    throw std::invalid_argument("successes must lie in [0, trials]");
  if (!(confidence > 0.0) || !(confidence < 1.0))
    throw std::invalid_argument("confidence must lie in (0, 1)");
  const double alpha = 1.0 - confidence;
  const int k = successes, n = trials;
  double lower = 0.0, upper = 1.0;
  if (k > 0)
    lower = boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1), alpha / 2.0);
  if (k < n)
    upper =
        boost::math::quantile(boost::math::beta_distribution<>(k + 1, n - k), 1.0 - alpha / 2.0);
  return {lower, upper};
}

std::string format_fit_result(const FitResult& r) {
  std::ostringstream os;
  os << (r.converged ? "converged" : "NOT converged") << " after " << r.iterations
     << " iterations, ssr = " << std::setprecision(6) << r.ssr;
  if (r.degenerate) os << " (degenerate)";
  os << "\n";
  for (const auto& p : r.params)
    os << "  " << std::left << std::setw(14) << p.name << " = " << std::setprecision(8)
       << p.value << " +- " << std::setprecision(3) << p.std_error << "\n";
  if (r.visibility)
    os << "  visibility A/B = " << std::setprecision(6) << *r.visibility << " +- "
       << (r.visibility_error ? *r.visibility_error : 0.0) << "\n";
  return os.str();
}

std::string fit_result_key_values(const FitResult& r) {
  std::ostringstream os;
  os << "converged=" << (r.converged ? 1 : 0) << "\n";
  os << "degenerate=" << (r.degenerate ? 1 : 0) << "\n";
  os << "iterations=" << r.iterations << "\n";
  os << "ssr=" << format_g17(r.ssr) << "\n";
  for (const auto& p : r.params) {
    os << p.name << ".value=" << format_g17(p.value) << "\n";
    os << p.name << ".stderr=" << format_g17(p.std_error) << "\n";
  }
  if (r.visibility) {
    os << "visibility.value=" << format_g17(*r.visibility) << "\n";
    os << "visibility.stderr=" << format_g17(r.visibility_error ? *r.visibility_error : 0.0)
       << "\n";
  }
  return os.str();
}

}  // namespace dephasim
