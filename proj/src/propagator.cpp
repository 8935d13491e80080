#include "openqosc/propagator.hpp"

#include "openqosc/errors.hpp"

#include <cmath>
#include <numbers>

namespace openqosc {

namespace {

Eigen::MatrixXcd creator_rows(const Eigen::MatrixXcd& rows, const OperatorBasis& basis) {
  Eigen::MatrixXcd out(rows.rows(), rows.cols());
  const Index N = basis.modes();
  out.leftCols(N) = rows.rightCols(N).conjugate();
  out.rightCols(N) = rows.leftCols(N).conjugate();
  return out;
}

bool blown_up(const Eigen::MatrixXcd& m) {
  const double peak = m.cwiseAbs().maxCoeff();
  return !std::isfinite(peak) || peak > kInstabilityThreshold;
}

void record(GreenTrace& trace, double t, const Eigen::MatrixXcd& rows, const OperatorBasis& basis) {
  trace.times.push_back(t);
  trace.u_values.push_back(rows(0, basis.a(0)));
  trace.anti_values.push_back(rows(0, basis.a_dag(0)));
  trace.defects.push_back(row_defect(rows, basis));
}

}  // namespace

void PropagationConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("propagation.dt must be > 0");
  if (!(t_max > 0.0)) throw ConfigError("propagation.t_max must be > 0");
  if (dt > t_max) throw ConfigError("propagation.dt must not exceed propagation.t_max");
  if (record_stride == 0) throw ConfigError("propagation.record_stride must be positive");
  const double ratio = t_max / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("propagation.t_max must be an integer multiple of propagation.dt");
}

std::size_t PropagationConfig::steps() const { return static_cast<std::size_t>(std::llround(t_max / dt)); }

GreenTrace compose(const SystemSpec& system, const DiscretizedBath& bath, const PropagationConfig& cfg) {
  cfg.validate();
  const BogoliubovMatrix step = step_coefficients(system, bath, cfg.dt, cfg.mode);
  GreenTrace trace = compose(step, cfg);
  const double gmax = bath.couplings.size() ? bath.couplings.cwiseAbs().maxCoeff() : 0.0;
  trace.coupling_warning = gmax * cfg.dt > 0.1;
  if (bath.uniform_spacing) trace.recurrence_time = 2.0 * std::numbers::pi / *bath.uniform_spacing;
  return trace;
}

GreenTrace compose(const BogoliubovMatrix& step, const PropagationConfig& cfg) {
  cfg.validate();
  if (std::abs(step.time - cfg.dt) > 1e-12 * std::max(1.0, cfg.dt))
    throw ConfigError("compose: step matrix time does not match propagation.dt");
  const OperatorBasis& basis = step.basis;
  const Index S = basis.n_system();
  const Index D = basis.dimension();
  const std::size_t n_steps = cfg.steps();

  GreenTrace trace;
  trace.times.reserve(n_steps / cfg.record_stride + 2);

  Eigen::MatrixXcd full;
  Eigen::MatrixXcd rows = Eigen::MatrixXcd::Identity(S, D);
  if (cfg.keep_final_matrix) full = Eigen::MatrixXcd::Identity(D, D);
  record(trace, 0.0, rows, basis);

  Eigen::MatrixXcd next;
  for (std::size_t j = 1; j <= n_steps; ++j) {
    const double t = static_cast<double>(j) * cfg.dt;
    if (cfg.keep_final_matrix) {
      next.noalias() = full * step.entries;
      full.swap(next);
      rows = full.topRows(S);
    } else {
      next.noalias() = rows * step.entries;
      rows.swap(next);
    }
    if (blown_up(rows)) {
      trace.unstable = true;
      trace.abort_time = t;
      if (rows.allFinite()) record(trace, t, rows, basis);
      break;
    }
    if (j % cfg.record_stride == 0 || j == n_steps) record(trace, t, rows, basis);
  }
  if (cfg.keep_final_matrix && !trace.unstable)
    trace.final_matrix = BogoliubovMatrix{full, static_cast<double>(n_steps) * cfg.dt, basis};
  return trace;
}

Complex green_u(const BogoliubovMatrix& m, Index i) { return m.entries(m.basis.a(i), m.basis.a(i)); }

Complex green_anti(const BogoliubovMatrix& m, Index i) { return m.entries(m.basis.a(i), m.basis.a_dag(i)); }

double bogoliubov_defect(const BogoliubovMatrix& m) {
  const Eigen::VectorXd metric = m.basis.metric();
  const Eigen::MatrixXcd g = m.entries * metric.asDiagonal() * m.entries.adjoint();
  return (g - Eigen::MatrixXcd(metric.cast<Complex>().asDiagonal())).cwiseAbs().maxCoeff();
}

double row_defect(const Eigen::MatrixXcd& rows, const OperatorBasis& basis) {
  const Eigen::VectorXd metric = basis.metric();
  const Eigen::MatrixXcd weighted = rows * metric.asDiagonal();
  const Eigen::MatrixXcd same = weighted * rows.adjoint();
  const Eigen::MatrixXcd cross = weighted * creator_rows(rows, basis).adjoint();
  const Index S = rows.rows();
  const double d1 = (same - Eigen::MatrixXcd::Identity(S, S)).cwiseAbs().maxCoeff();
  const double d2 = cross.cwiseAbs().maxCoeff();
  return std::max(d1, d2);
}

double expectation_x(Complex u, Complex anti, Complex alpha, double omega0) {
  const Complex a = u * alpha + anti * std::conj(alpha);
  return 2.0 * a.real() / std::sqrt(2.0 * omega0);
}

double expectation_x(const BogoliubovMatrix& m, Complex alpha, double omega0) {
  return expectation_x(green_u(m), green_anti(m), alpha, omega0);
}

std::optional<double> oscillation_onset(const std::vector<double>& times, const std::vector<double>& abs_u) {
  if (abs_u.size() < 3 || times.size() != abs_u.size())
    throw InsufficientDataError("oscillation_onset: at least 3 samples required");
  // Suffix maxima allow an O(n) scan.
  std::vector<double> later(abs_u.size());
  later.back() = abs_u.back();
  for (std::size_t j = abs_u.size() - 1; j-- > 0;) later[j] = std::max(abs_u[j], later[j + 1]);
  for (std::size_t j = 1; j + 1 < abs_u.size(); ++j) {
    if (abs_u[j] < abs_u[j - 1] && abs_u[j] < abs_u[j + 1] && later[j + 1] >= 1.01 * abs_u[j]) return times[j];
  }
  return std::nullopt;
}

std::optional<double> oscillation_onset(const GreenTrace& trace) {
  std::vector<double> mags(trace.u_values.size());
  for (std::size_t j = 0; j < mags.size(); ++j) mags[j] = std::abs(trace.u_values[j]);
  return oscillation_onset(trace.times, mags);
}

std::optional<double> oscillation_amplitude(const GreenTrace& trace) {
  const auto onset = oscillation_onset(trace);
  if (!onset) return std::nullopt;
  double peak = 0.0;
  for (std::size_t j = 0; j < trace.size(); ++j)
    if (trace.times[j] >= *onset) peak = std::max(peak, std::abs(trace.u_values[j]));
  return peak;
}

double default_dt(const SystemSpec& system, const DiscretizedBath& bath) {
  double omega_max = system.omegas.maxCoeff();
  if (bath.modes() > 0) omega_max = std::max(omega_max, bath.omegas.maxCoeff());
  double dt = 0.1 / omega_max;
  const double g2 = bath.couplings.squaredNorm();
  if (g2 > 0.0) dt = std::min(dt, 0.05 / std::sqrt(g2));
  const double gmax = bath.couplings.size() ? bath.couplings.cwiseAbs().maxCoeff() : 0.0;
  while (gmax * dt > 0.1) dt *= 0.5;
  return dt;
}

}  // namespace openqosc
