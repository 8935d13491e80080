#pragma once

#include "openqosc/bch_coeffs.hpp"
#include "openqosc/spectral.hpp"

#include <optional>

namespace openqosc {

/// Quadratic form of H = P^T P / 2 + X^T V X / 2 in position/momentum
/// coordinates: diagonal Omega_i^2, omega_k^2; system-bath entries
/// 2 g_ik sqrt(Omega_i omega_k).
struct PotentialMatrix {
  Eigen::MatrixXd entries;
};

PotentialMatrix build_potential_matrix(const SystemSpec& system, const DiscretizedBath& bath);

/// Exact normal-mode evolution on a finite bath. The decomposition is done
/// once; evaluation at a time t is cheap for the system rows.
class ExactEvolution {
 public:
  ExactEvolution(const SystemSpec& system, const DiscretizedBath& bath,
                 CouplingMode mode = CouplingMode::FullCoupling);

  BogoliubovMatrix matrix(double t) const;
  /// Rows of the system annihilators a_i(t), S x D.
  Eigen::MatrixXcd system_rows(double t) const;
  Complex green_u(double t, Index i = 0) const;
  Complex green_anti(double t, Index i = 0) const;

  /// Eigenvalues of V (full coupling) or of the one-particle matrix (RWA), ascending.
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const OperatorBasis& basis() const { return basis_; }
  CouplingMode mode() const { return mode_; }

 private:
  struct Functions {
    Eigen::VectorXd c, s, ls;  // cos(sqrt(l) t), sin(sqrt(l) t)/sqrt(l), l * s
  };
  Functions functions(double t) const;
  Eigen::MatrixXcd rows_for(const Eigen::MatrixXd& q_rows, const Eigen::VectorXd& native, double t) const;

  OperatorBasis basis_;
  CouplingMode mode_;
  Eigen::VectorXd native_;  // Omega_i, omega_k
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd q_;
  double zero_tol_ = 0.0;
};

BogoliubovMatrix exact_propagator(const SystemSpec& system, const DiscretizedBath& bath, double t);

enum class Stability { Stable, Marginal, Unstable };

const char* stability_name(Stability s);

struct StabilityReport {
  Eigen::VectorXd eigenvalues;
  Stability classification = Stability::Stable;
  double tolerance = 0.0;
  /// 4 sum_k g_ik^2 / (Omega_i omega_k), largest over system rows.
  double discrete_criterion = 0.0;
  std::optional<double> eta_critical_estimate;

  double min_eigenvalue() const { return eigenvalues[0]; }
};

/// Unstable iff min eig < -tol, Marginal iff |min eig| <= tol,
/// tol = 1e-6 * max diagonal of V.
StabilityReport classify_stability(const PotentialMatrix& v, const SystemSpec& system, const DiscretizedBath& bath,
                                   const std::optional<SpectralDensity>& spec = std::nullopt);

/// Smallest eigenvalue of V for a single system oscillator from the secular
/// equation of the arrow matrix, O(K) per iteration.
double min_eigenvalue_single(double omega0, const DiscretizedBath& bath);

/// eta at which min eig(V) = 0 for an Ohmic-family bath on `grid`, located by
/// bisection on the secular minimum eigenvalue.
double bisect_critical_eta(const OhmicFamily& family, const GridConfig& grid, double omega0, double tol = 1e-12);

}  // namespace openqosc
