#pragma once

// Composite Simpson rule on a geometric-then-uniform partition, used as a
// slow independent reference for the adaptive quadrature.

#include <cmath>
#include <algorithm>
#include <functional>

namespace reference {

inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int j = 1; j < panels; ++j) sum += f(a + j * h) * (j % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// int_0^upper f with the substitution w = x^2 when the integrand is singular
/// like w^-1/2 at the origin.
inline double simpson_sqrt_substituted(const std::function<double(double)>& f, double upper, int panels) {
  return simpson([&](double x) { x = std::max(x, 1e-12); return 2.0 * x * f(x * x); }, 0.0, std::sqrt(upper), panels);
}

}  // namespace reference
