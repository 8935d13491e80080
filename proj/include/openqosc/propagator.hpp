#pragma once

#include "openqosc/bch_coeffs.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace openqosc {

struct PropagationConfig {
  double t_max = 50.0;
  double dt = 0.01;
  CouplingMode mode = CouplingMode::FullCoupling;
  std::size_t record_stride = 1;
  /// Also accumulate the full matrix M(t_max) (D^3 per step; small baths only).
  bool keep_final_matrix = false;

  /// Throws ConfigError unless dt <= t_max and t_max / dt is an integer to 1e-9.
  void validate() const;
  std::size_t steps() const;
};

/// Recorded entries of the composed propagator for system oscillator 0.
struct GreenTrace {
  std::vector<double> times;
  std::vector<Complex> u_values;     // M[a, a]
  std::vector<Complex> anti_values;  // M[a, a^+]
  std::vector<double> defects;       // Bogoliubov defect of the system rows
  bool unstable = false;
  std::optional<double> abort_time;
  /// max_k |g_k| dt > 0.1
  bool coupling_warning = false;
  /// 2 pi / dw for uniform midpoint baths.
  std::optional<double> recurrence_time;
  std::optional<BogoliubovMatrix> final_matrix;

  std::size_t size() const { return times.size(); }
};

/// Entries beyond this magnitude abort the composition.
inline constexpr double kInstabilityThreshold = 1e12;

/// M(j dt) = M_step(dt)^j by repeated multiplication. Only the rows of the
/// system annihilators are propagated unless the final matrix is requested.
GreenTrace compose(const SystemSpec& system, const DiscretizedBath& bath, const PropagationConfig& cfg);

/// Same, from a prebuilt step matrix.
GreenTrace compose(const BogoliubovMatrix& step, const PropagationConfig& cfg);

Complex green_u(const BogoliubovMatrix& m, Index i = 0);
Complex green_anti(const BogoliubovMatrix& m, Index i = 0);

/// max |M Sigma M^+ - Sigma|.
double bogoliubov_defect(const BogoliubovMatrix& m);

/// Defect restricted to the rows {a_i, a_i^+} generated by the given
/// annihilator rows (S x D).
double row_defect(const Eigen::MatrixXcd& rows, const OperatorBasis& basis);

/// <x(t)> for a coherent system state |alpha> and vacuum bath, m = 1.
double expectation_x(Complex u, Complex anti, Complex alpha, double omega0);
double expectation_x(const BogoliubovMatrix& m, Complex alpha, double omega0);

/// Earliest time of a strict local minimum of |u| that is later exceeded by
/// at least 1%. Throws InsufficientDataError below 3 samples.
std::optional<double> oscillation_onset(const GreenTrace& trace);
std::optional<double> oscillation_onset(const std::vector<double>& times, const std::vector<double>& abs_u);

/// max |u| at or after the onset; empty when there is no onset.
std::optional<double> oscillation_amplitude(const GreenTrace& trace);

/// min(0.1 / omega_max, 0.05 / sqrt(sum g^2)), halved until max |g| dt <= 0.1.
double default_dt(const SystemSpec& system, const DiscretizedBath& bath);

}  // namespace openqosc
