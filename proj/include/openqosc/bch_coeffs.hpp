#pragma once

#include "openqosc/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace openqosc {

using Index = Eigen::Index;
using Complex = std::complex<double>;

/// System oscillator frequencies Omega_i (hbar = m = 1).
struct SystemSpec {
  Eigen::VectorXd omegas;

  static SystemSpec single(double omega0);
  Index size() const { return omegas.size(); }
  double omega0() const { return omegas[0]; }
  void validate() const;
};

/// Ordering (a_1..a_S, b_1..b_K, a_1^+..a_S^+, b_1^+..b_K^+) with signature
/// metric +1 on the annihilators and -1 on the creators.
class OperatorBasis {
 public:
  OperatorBasis() = default;
  OperatorBasis(Index n_system, Index n_bath) : system_(n_system), bath_(n_bath) {}

  Index n_system() const { return system_; }
  Index n_bath() const { return bath_; }
  Index modes() const { return system_ + bath_; }
  Index dimension() const { return 2 * modes(); }

  Index a(Index i) const { return i; }
  Index b(Index k) const { return system_ + k; }
  Index a_dag(Index i) const { return modes() + i; }
  Index b_dag(Index k) const { return modes() + system_ + k; }
  /// Index of the Hermitian-conjugate basis element.
  Index conjugate(Index j) const { return j < modes() ? j + modes() : j - modes(); }

  Eigen::VectorXd metric() const;

  friend bool operator==(const OperatorBasis&, const OperatorBasis&) = default;

 private:
  Index system_ = 0;
  Index bath_ = 0;
};

/// Linear map v(t) = M v(0) on the operator basis.
struct BogoliubovMatrix {
  Eigen::MatrixXcd entries;
  double time = 0.0;
  OperatorBasis basis;

  static BogoliubovMatrix identity(const OperatorBasis& basis);
};

enum class CouplingMode { FullCoupling, RWA };

/// Second-order (in the couplings) expansion of the Heisenberg map over one
/// step dt, position-position coupling.
BogoliubovMatrix step_coefficients_full(const SystemSpec& system, const DiscretizedBath& bath, double dt);

/// Same with only the excitation-conserving coupling terms kept.
BogoliubovMatrix step_coefficients_rwa(const SystemSpec& system, const DiscretizedBath& bath, double dt);

BogoliubovMatrix step_coefficients(const SystemSpec& system, const DiscretizedBath& bath, double dt,
                                   CouplingMode mode);

/// The exact g^0 + g^1 + g^2 truncation assembled from divided differences of
/// exp(-i lambda t) only. Independent of the closed-form kernels; used for their
/// resonance branches and for cross-checks.
BogoliubovMatrix step_coefficients_divided_difference(const SystemSpec& system, const DiscretizedBath& bath,
                                                      double dt, CouplingMode mode);

namespace kernels {

// Closed-form second-order coefficients for one intermediate mode. `x` is the
// frequency of the row mode, `mid` the intermediate, `z` the column mode.

/// Coefficient of the annihilator x in x(t), through mid and mid^+.
Complex self_annihilator(double x, double mid, double g, double t);
/// Coefficient of the creator x^+ in x(t).
Complex self_creator(double x, double mid, double g, double t);
/// Coefficient of z in x(t), z != x.
Complex transfer_annihilator(double x, double mid, double z, double gx, double gz, double t);
/// Coefficient of z^+ in x(t).
Complex transfer_creator(double x, double mid, double z, double gx, double gz, double t);

Complex rwa_self(double x, double mid, double g, double t);
Complex rwa_transfer(double x, double mid, double z, double gx, double gz, double t);

/// Detuning below which the closed forms hand over to divided differences.
inline constexpr double kResonanceThreshold = 1e-3;

}  // namespace kernels

/// T_0 .. T_N over the real basis (X_a[0..S), P_a[0..S), X_b[0..K), P_b[0..K))
/// with X = a^+ + a, P = a^+ - a, T_n = [H, T_{n-1}], T_0 = X_{a,seed}.
/// `by_order[n][p]` is the part of T_n of order p in the couplings, p <= max_g_order.
struct TaylorCoefficients {
  std::vector<Eigen::VectorXd> vectors;
  std::vector<std::vector<Eigen::VectorXd>> by_order;
  Index n_system = 0;
  Index n_bath = 0;
  Index seed = 0;
  double seed_frequency = 0.0;
  int max_g_order = 0;

  int order() const { return static_cast<int>(vectors.size()) - 1; }
  Index x_a(Index i) const { return i; }
  Index p_a(Index i) const { return n_system + i; }
  Index x_b(Index k) const { return 2 * n_system + k; }
  Index p_b(Index k) const { return 2 * n_system + n_bath + k; }
};

TaylorCoefficients taylor_coefficients(const SystemSpec& system, const DiscretizedBath& bath, int order,
                                       Index seed = 0, int max_g_order = 6);

/// Ladder-basis row of a_seed(t) = (X(t) - P(t)) / 2 from the partial sums
/// X(t) = sum (it)^n/n! T_n and P(t) = sum (it)^n/n! T_{n+1} / Omega_seed.
/// Throws TruncationError when the last term is not below 1e-12 of the
/// largest term.
Eigen::VectorXcd taylor_evaluate(const TaylorCoefficients& coeffs, double t);

/// Same, split by coupling order: element p is the order-p part.
std::vector<Eigen::VectorXcd> taylor_evaluate_orders(const TaylorCoefficients& coeffs, double t);

/// Ladder-basis row of X_{a,seed}(t) alone.
Eigen::VectorXcd taylor_evaluate_x(const TaylorCoefficients& coeffs, double t);

/// Rotating-wave series T'_n = [H_R, T'_{n-1}], T'_0 = a_seed, stored directly
/// in the ladder basis (it couples annihilators only). Row of a_seed(t).
Eigen::VectorXcd rwa_taylor_evaluate(const SystemSpec& system, const DiscretizedBath& bath, double t,
                                     int order, Index seed = 0);

/// Order-(2n-1) and order-2n contributions to a_i(t) from the all-order
/// chain sums, one row per system oscillator in the ladder basis.
struct ChainTerm {
  int n = 0;
  Eigen::MatrixXcd odd;
  Eigen::MatrixXcd even;
};

/// Requires 1 <= n <= 3 and pairwise distinct mode frequencies.
ChainTerm chain_term(const SystemSpec& system, const DiscretizedBath& bath, int n, double t);

}  // namespace openqosc
