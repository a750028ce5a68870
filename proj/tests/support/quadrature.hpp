#pragma once

#include <cmath>
#include <utility>

// Plain numerical oracles used to cross-check closed forms independently.

namespace test_support {

// Composite Simpson rule over [a, b]; n is rounded up to an even count.
template <typename F>
double simpson(F f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Ensemble average of exp(i x tau) over the gamma(3) density x^2/2 e^{-x}:
// returns (magnitude, phase), the independent route to the fringe envelope.
inline std::pair<double, double> gamma3_characteristic(double tau) {
  const double re =
      simpson([tau](double x) { return 0.5 * x * x * std::exp(-x) * std::cos(x * tau); }, 0.0,
              60.0, 40000);
  const double im =
      simpson([tau](double x) { return 0.5 * x * x * std::exp(-x) * std::sin(x * tau); }, 0.0,
              60.0, 40000);
  return {std::hypot(re, im), std::atan2(im, re)};
}

}  // namespace test_support
