#pragma once

// Divided differences of the phase function h(lambda) = exp(-i lambda t) and
// of entire power series, stable for confluent or nearly confluent nodes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

namespace openqosc::dd {

template <typename Real>
Real sinc(Real x) {
  if (std::abs(x) < Real(1e-4)) {
    const Real x2 = x * x;
    return Real(1) - x2 / Real(6) + x2 * x2 / Real(120);
  }
  return std::sin(x) / x;
}

template <typename Real>
std::complex<Real> phase(Real lambda, Real t) {
  return std::polar(Real(1), -lambda * t);
}

/// h[a, b] with h(lambda) = exp(-i lambda t). Equals -i t exp(-i m t) sinc(d t / 2)
/// with m the midpoint and d the separation, which has no removable singularity.
template <typename Real>
std::complex<Real> phase_dd(Real a, Real b, Real t) {
  const Real mid = Real(0.5) * (a + b);
  const Real d = b - a;
  return std::complex<Real>(0, -t) * phase(mid, t) * sinc(Real(0.5) * d * t);
}

/// h[a, b, c] for h(lambda) = exp(-i lambda t).
template <typename Real>
std::complex<Real> phase_dd(Real a, Real b, Real c, Real t) {
  const Real ab = std::abs(a - b), bc = std::abs(b - c), ac = std::abs(a - c);
  const Real spread = std::max({ab, bc, ac});
  if (spread * std::abs(t) <= Real(1)) {
    // Series about the centroid: exp(-i m t) * sum_p (-i t)^p / p! * h_{p-2}(y)
    // where h_q are complete homogeneous symmetric polynomials of y = x - m.
    const Real m = (a + b + c) / Real(3);
    const std::array<Real, 3> y = {a - m, b - m, c - m};
    constexpr int kTerms = 40;
    std::array<Real, kTerms + 1> hom{};
    hom[0] = 1;
    for (Real yi : y)
      for (int q = 1; q <= kTerms; ++q) hom[q] += yi * hom[q - 1];
    std::complex<Real> sum = 0;
    std::complex<Real> coef(Real(-0.5) * t * t, 0);  // (-i t)^2 / 2!
    for (int p = 2; p <= kTerms + 2; ++p) {
      const std::complex<Real> term = coef * hom[p - 2];
      sum += term;
      if (p > 4 && std::abs(term) < std::numeric_limits<Real>::epsilon() * Real(1e-3) * std::abs(sum))
        break;
      coef *= std::complex<Real>(0, -t) / Real(p + 1);
    }
    return phase(m, t) * sum;
  }
  // The pair with the largest separation forms the outer nodes of the
  // recursion, so the final division is well conditioned.
  Real outer1 = a, inner = b, outer2 = c;
  if (ab >= bc && ab >= ac) {
    outer1 = a; outer2 = b; inner = c;
  } else if (bc >= ab && bc >= ac) {
    outer1 = b; outer2 = c; inner = a;
  }
  return (phase_dd(outer1, inner, t) - phase_dd(inner, outer2, t)) / (outer1 - outer2);
}

/// Divided difference f[x_0, ..., x_{m-1}] of the power series
/// f(x) = sum_j coeffs[j] x^j, valid for repeated nodes. Uses
/// f[x...] = sum_j coeffs[j] h_{j-m+1}(x), h the complete homogeneous
/// symmetric polynomials.
template <typename Real>
Real series_dd(std::span<const Real> coeffs, std::span<const Real> nodes) {
  const std::size_t m = nodes.size();
  const std::size_t n = coeffs.size();
  if (m == 0 || n < m) return Real(0);
  const std::size_t degree = n - m;
  std::vector<Real> hom(degree + 1, Real(0));
  hom[0] = 1;
  for (Real x : nodes)
    for (std::size_t q = 1; q <= degree; ++q) hom[q] += x * hom[q - 1];
  Real sum = 0;
  for (std::size_t j = m - 1; j < n; ++j) sum += coeffs[j] * hom[j - m + 1];
  return sum;
}

/// Divided difference of f over pairwise distinct nodes by the partial-fraction
/// form sum_j f(x_j) / prod_{l != j} (x_j - x_l).
template <typename Real, typename F>
Real partial_fraction_dd(F&& f, std::span<const Real> nodes) {
  Real sum = 0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    Real denom = 1;
    for (std::size_t l = 0; l < nodes.size(); ++l)
      if (l != j) denom *= nodes[j] - nodes[l];
    sum += f(nodes[j]) / denom;
  }
  return sum;
}

}  // namespace openqosc::dd
