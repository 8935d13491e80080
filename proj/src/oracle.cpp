#include "openqosc/oracle.hpp"

#include "openqosc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace openqosc {

PotentialMatrix build_potential_matrix(const SystemSpec& system, const DiscretizedBath& bath) {
  const Index S = system.size(), K = bath.modes();
  if (bath.system_rows() != S) throw ConfigError("bath coupling rows must match the number of system oscillators");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(S + K, S + K);
  v.diagonal().head(S) = system.omegas.array().square().matrix();
  v.diagonal().tail(K) = bath.omegas.array().square().matrix();
  for (Index i = 0; i < S; ++i)
    for (Index k = 0; k < K; ++k) {
      const double c = 2.0 * bath.couplings(i, k) * std::sqrt(system.omegas[i] * bath.omegas[k]);
      v(i, S + k) = c;
      v(S + k, i) = c;
    }
  return {v};
}

ExactEvolution::ExactEvolution(const SystemSpec& system, const DiscretizedBath& bath, CouplingMode mode)
    : basis_(system.size(), bath.modes()), mode_(mode) {
  system.validate();
  bath.validate();
  const Index S = system.size(), K = bath.modes();
  native_.resize(S + K);
  native_ << system.omegas, bath.omegas;

  Eigen::MatrixXd m;
  if (mode == CouplingMode::FullCoupling) {
    m = build_potential_matrix(system, bath).entries;
  } else {
    if (bath.system_rows() != S) throw ConfigError("bath coupling rows must match the number of system oscillators");
    m = Eigen::MatrixXd::Zero(S + K, S + K);
    m.diagonal() = native_;
    m.topRightCorner(S, K) = bath.couplings;
    m.bottomLeftCorner(K, S) = bath.couplings.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("exact evolution: eigensolver did not converge", std::numeric_limits<double>::infinity());
  }
  lambda_ = solver.eigenvalues();
  q_ = solver.eigenvectors();
  const double residual = (m * q_ - q_ * lambda_.asDiagonal()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!(residual <= 1e-8 * scale)) throw NumericalError("exact evolution: eigen decomposition residual too large", residual);
  zero_tol_ = 1e-12 * scale;
}

ExactEvolution::Functions ExactEvolution::functions(double t) const {
  const Index n = lambda_.size();
  Functions f{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Index l = 0; l < n; ++l) {
    const double lam = lambda_[l];
    if (std::abs(lam) < zero_tol_) {
      f.c[l] = 1.0;
      f.s[l] = t;
    } else if (lam > 0.0) {
      const double r = std::sqrt(lam);
      f.c[l] = std::cos(r * t);
      f.s[l] = std::sin(r * t) / r;
    } else {
      const double r = std::sqrt(-lam);
      f.c[l] = std::cosh(r * t);
      f.s[l] = std::sinh(r * t) / r;
    }
    f.ls[l] = lam * f.s[l];
  }
  return f;
}

Eigen::MatrixXcd ExactEvolution::rows_for(const Eigen::MatrixXd& q_rows, const Eigen::VectorXd& native,
                                          double t) const {
  const Index N = basis_.modes();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(q_rows.rows(), 2 * N);
  if (mode_ == CouplingMode::RWA) {
    Eigen::VectorXcd ph(lambda_.size());
    for (Index l = 0; l < lambda_.size(); ++l) ph[l] = std::polar(1.0, -lambda_[l] * t);
    out.leftCols(N) = (q_rows.cast<Complex>() * ph.asDiagonal()) * q_.transpose().cast<Complex>();
    return out;
  }
  const Functions f = functions(t);
  const Eigen::MatrixXd xx = (q_rows * f.c.asDiagonal()) * q_.transpose();
  const Eigen::MatrixXd xp = (q_rows * f.s.asDiagonal()) * q_.transpose();
  const Eigen::MatrixXd px = -(q_rows * f.ls.asDiagonal()) * q_.transpose();
  const Eigen::ArrayXd alpha_col = (native_.array() / 2.0).sqrt();
  const Eigen::ArrayXd beta_col = 1.0 / (2.0 * native_.array()).sqrt();
  const Complex I(0.0, 1.0);
  for (Index r = 0; r < q_rows.rows(); ++r) {
    const double alpha = std::sqrt(native[r] / 2.0);
    const double beta = 1.0 / std::sqrt(2.0 * native[r]);
    // a_r(t) = alpha X_r(t) + i beta P_r(t), with P_r's P0-coefficients equal to xx.
    const Eigen::ArrayXcd cx = alpha * xx.row(r).array().cast<Complex>() + I * beta * px.row(r).array().cast<Complex>();
    const Eigen::ArrayXcd cp = alpha * xp.row(r).array().cast<Complex>() + I * beta * xx.row(r).array().cast<Complex>();
    // x0 = beta (a + a^+), p0 = i alpha (a^+ - a)
    out.row(r).head(N) = (cx * beta_col.cast<Complex>() - I * cp * alpha_col.cast<Complex>()).matrix().transpose();
    out.row(r).tail(N) = (cx * beta_col.cast<Complex>() + I * cp * alpha_col.cast<Complex>()).matrix().transpose();
  }
  return out;
}

Eigen::MatrixXcd ExactEvolution::system_rows(double t) const {
  const Index S = basis_.n_system();
  return rows_for(q_.topRows(S), native_.head(S), t);
}

BogoliubovMatrix ExactEvolution::matrix(double t) const {
  const Index N = basis_.modes();
  const Eigen::MatrixXcd ann = rows_for(q_, native_, t);
  BogoliubovMatrix m;
  m.basis = basis_;
  m.time = t;
  m.entries.resize(2 * N, 2 * N);
  m.entries.topRows(N) = ann;
  m.entries.bottomLeftCorner(N, N) = ann.rightCols(N).conjugate();
  m.entries.bottomRightCorner(N, N) = ann.leftCols(N).conjugate();
  return m;
}

Complex ExactEvolution::green_u(double t, Index i) const {
  return rows_for(q_.row(i), native_.segment(i, 1), t)(0, basis_.a(i));
}

Complex ExactEvolution::green_anti(double t, Index i) const {
  return rows_for(q_.row(i), native_.segment(i, 1), t)(0, basis_.a_dag(i));
}

BogoliubovMatrix exact_propagator(const SystemSpec& system, const DiscretizedBath& bath, double t) {
  return ExactEvolution(system, bath).matrix(t);
}

const char* stability_name(Stability s) {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::Marginal: return "Marginal";
    case Stability::Unstable: return "Unstable";
  }
  return "?";
}

StabilityReport classify_stability(const PotentialMatrix& v, const SystemSpec& system, const DiscretizedBath& bath,
                                   const std::optional<SpectralDensity>& spec) {
  StabilityReport report;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v.entries, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("classify_stability: eigensolver did not converge", std::numeric_limits<double>::infinity());
  report.eigenvalues = solver.eigenvalues();
  report.tolerance = 1e-6 * v.entries.diagonal().maxCoeff();
  const double lo = report.eigenvalues[0];
  if (lo < -report.tolerance)
    report.classification = Stability::Unstable;
  else if (std::abs(lo) <= report.tolerance)
    report.classification = Stability::Marginal;
  else
    report.classification = Stability::Stable;
  for (Index i = 0; i < system.size(); ++i)
    report.discrete_criterion =
        std::max(report.discrete_criterion, discrete_stability_sum(bath, system.omegas[i], i));
  if (spec) {
    if (const auto* ohmic = std::get_if<OhmicFamily>(&*spec))
      report.eta_critical_estimate = critical_coupling(ohmic->s, ohmic->omega_c, system.omega0());
  }
  return report;
}

double min_eigenvalue_single(double omega0, const DiscretizedBath& bath) {
  if (bath.system_rows() != 1) throw ConfigError("min_eigenvalue_single: exactly one system oscillator required");
  const Index K = bath.modes();
  Eigen::ArrayXd w2 = bath.omegas.array().square();
  Eigen::ArrayXd c2 = 4.0 * bath.couplings.row(0).transpose().array().square() * omega0 * bath.omegas.array();
  const double o2 = omega0 * omega0;
  // Arrow matrix: eigenvalues below min w^2 solve f(l) = o2 - l - sum c2 / (w2 - l) = 0,
  // with f strictly decreasing there.
  Index k_low = 0;
  for (Index k = 1; k < K; ++k)
    if (w2[k] < w2[k_low]) k_low = k;
  if (K == 0 || c2.maxCoeff() == 0.0) return K == 0 ? o2 : std::min(o2, w2.minCoeff());
  double hi = w2[k_low];
  double total = 0.0;
  for (Index k = 0; k < K; ++k) total += c2[k] / w2[k];
  auto f = [&](double l) { return o2 - l - (c2 / (w2 - l)).sum(); };
  double lo = std::min(0.0, o2 - total) - 1.0;
  while (f(lo) < 0.0) lo = 2.0 * lo - 1.0;
  if (c2[k_low] == 0.0 && f(hi) >= 0.0) return hi;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double bisect_critical_eta(const OhmicFamily& family, const GridConfig& grid, double omega0, double tol) {
  auto min_eig = [&](double eta) {
    OhmicFamily f = family;
    f.eta = eta;
    return min_eigenvalue_single(omega0, discretize(f, grid));
  };
  double lo = 0.0, hi = std::max(family.eta, 1e-3);
  while (min_eig(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("bisect_critical_eta: no sign change found", hi);
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (min_eig(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace openqosc
