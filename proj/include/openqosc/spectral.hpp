#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace openqosc {

/// J(w) = 2 pi eta w (w / omega_c)^(s - 1) exp(-w / omega_c).
/// s = 1 is Ohmic, s < 1 sub-Ohmic, s > 1 super-Ohmic.
struct OhmicFamily {
  double s = 1.0;
  double eta = 0.1;
  double omega_c = 1.0;
};

/// J(w) = strength * width^2 / ((w - center)^2 + width^2); strength is the
/// peak height.
struct Lorentzian {
  double center = 1.0;
  double width = 0.01;
  double strength = 0.01;
};

/// Piecewise-linear density through (omega, J) points; zero outside.
struct Tabulated {
  std::vector<double> omega;
  std::vector<double> density;
};

using SpectralDensity = std::variant<OhmicFamily, Lorentzian, Tabulated>;

/// Throws DomainError when a family invariant is violated.
void validate(const SpectralDensity& spec);

/// Characteristic frequency scale: omega_c, the Lorentzian center, or the
/// last table node.
double frequency_scale(const SpectralDensity& spec);

std::string family_name(const SpectralDensity& spec);

double evaluate_density(const SpectralDensity& spec, double omega);

enum class GridScheme { LinearMidpoint, GaussLegendre };

struct GridConfig {
  std::size_t n_modes = 256;
  double omega_min = 0.0;
  double omega_max = 10.0;
  GridScheme scheme = GridScheme::LinearMidpoint;

  void validate() const;
};

/// Finite set of bath modes. Row i of `couplings` holds g_{ik} for system
/// oscillator i.
struct DiscretizedBath {
  Eigen::VectorXd omegas;
  Eigen::MatrixXd couplings;
  /// Cell width of a uniform midpoint grid; empty for other schemes.
  std::optional<double> uniform_spacing;

  Eigen::Index modes() const { return omegas.size(); }
  Eigen::Index system_rows() const { return couplings.rows(); }
  void validate() const;

  /// Same modes, with `rows` system oscillators each coupled like row 0.
  DiscretizedBath replicated(Eigen::Index rows) const;
};

/// Modes w_k with g_k^2 = J(w_k) dw_k / (2 pi); a single coupling row.
DiscretizedBath discretize(const SpectralDensity& spec, const GridConfig& grid);

/// Result of 4 / (2 pi w0) * int_{floor}^inf J(w) / w dw. `value` is empty
/// when the integral diverges as the floor goes to zero.
struct StabilityIntegral {
  std::optional<double> value;
  double abs_error = 0.0;

  bool divergent() const { return !value.has_value(); }
};

/// A floor of exactly zero requests the limit floor -> 0+, with divergence
/// detection.
StabilityIntegral stability_integral(const SpectralDensity& spec, double omega0,
                                     double omega_floor = 0.0);

/// eta_M = omega0 / (4 omega_c Gamma(s)): the coupling at which the
/// continuum stability integral reaches 1.
double critical_coupling(double s, double omega_c, double omega0);

/// 4 sum_k g_k^2 / (omega0 w_k) for system row `row`.
double discrete_stability_sum(const DiscretizedBath& bath, double omega0, Eigen::Index row = 0);

}  // namespace openqosc
