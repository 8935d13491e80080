#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <utility>
#include <vector>

namespace openqosc::quad {

template <typename Real>
struct IntegralEstimate {
  Real value{0};
  Real error{0};
  std::size_t intervals{0};
  bool converged{false};
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule, nodes on [0, 1] of
// the symmetric half.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Real, typename F>
std::pair<Real, Real> kronrod15(F&& f, Real a, Real b) {
  const Real center = Real(0.5) * (a + b);
  const Real half = Real(0.5) * (b - a);
  const Real fc = f(center);
  Real kronrod = fc * Real(kKronrodWeights[7]);
  Real gauss = fc * Real(kGaussWeights[3]);
  for (std::size_t j = 0; j < 7; ++j) {
    const Real dx = half * Real(kKronrodNodes[j]);
    const Real pair = f(center - dx) + f(center + dx);
    kronrod += Real(kKronrodWeights[j]) * pair;
    if (j % 2 == 1) gauss += Real(kGaussWeights[j / 2]) * pair;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below max(abs_tol, rel_tol * |I|).
template <typename Real, typename F>
IntegralEstimate<Real> integrate(F&& f, Real a, Real b, Real abs_tol,
                                 Real rel_tol = Real(0),
                                 std::size_t max_intervals = 4000) {
  struct Piece {
    Real a, b, value, error;
    bool operator<(const Piece& other) const { return error < other.error; }
  };
  IntegralEstimate<Real> out;
  if (!(b > a)) return out;

  std::priority_queue<Piece> heap;
  auto [v0, e0] = detail::kronrod15<Real>(f, a, b);
  heap.push({a, b, v0, e0});
  Real total = v0;
  Real total_err = e0;
  while (heap.size() < max_intervals) {
    if (total_err <= std::max(abs_tol, rel_tol * std::abs(total))) {
      out.converged = true;
      break;
    }
    Piece worst = heap.top();
    heap.pop();
    const Real mid = Real(0.5) * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Cannot split further in floating point.
      heap.push(worst);
      break;
    }
    auto [vl, el] = detail::kronrod15<Real>(f, worst.a, mid);
    auto [vr, er] = detail::kronrod15<Real>(f, mid, worst.b);
    total += vl + vr - worst.value;
    total_err += el + er - worst.error;
    heap.push({worst.a, mid, vl, el});
    heap.push({mid, worst.b, vr, er});
  }
  // Re-sum to shed the drift of the running updates.
  out.value = 0;
  out.error = 0;
  out.intervals = heap.size();
  while (!heap.empty()) {
    out.value += heap.top().value;
    out.error += heap.top().error;
    heap.pop();
  }
  if (out.error <= std::max(abs_tol, rel_tol * std::abs(out.value))) out.converged = true;
  return out;
}

/// Gauss-Legendre nodes and weights mapped to [a, b], nodes ascending.
template <typename Real>
std::pair<std::vector<Real>, std::vector<Real>> gauss_legendre(std::size_t n, Real a, Real b) {
  std::vector<Real> nodes(n), weights(n);
  const Real half = Real(0.5) * (b - a);
  const Real center = Real(0.5) * (a + b);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    Real x = std::cos(std::numbers::pi_v<Real> * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Real p0 = 1, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const Real p2 = ((Real(2 * k) - 1) * x * p1 - Real(k - 1) * p0) / Real(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = Real(n) * (x * p1 - p0) / (x * x - 1);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Real(1e-15)) break;
    }
    // Recompute the derivative at the converged node.
    {
      Real p0 = 1, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const Real p2 = ((Real(2 * k) - 1) * x * p1 - Real(k - 1) * p0) / Real(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = Real(n) * (x * p1 - p0) / (x * x - 1);
    }
    const Real w = Real(2) / ((1 - x * x) * dp * dp);
    nodes[i] = center - half * x;
    nodes[n - 1 - i] = center + half * x;
    weights[i] = w * half;
    weights[n - 1 - i] = w * half;
  }
  return {nodes, weights};
}

}  // namespace openqosc::quad
