#include "openqosc/spectral.hpp"

#include "openqosc/errors.hpp"
#include "openqosc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace openqosc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// J(w) / w, finite at w -> 0 whenever the integral can converge.
double density_over_omega(const SpectralDensity& spec, double omega) {
  return std::visit(
      Overloaded{
          [&](const OhmicFamily& o) {
            const double x = omega / o.omega_c;
            return kTwoPi * o.eta * std::pow(x, o.s - 1.0) * std::exp(-x);
          },
          [&](const Lorentzian&) { return evaluate_density(spec, omega) / omega; },
          [&](const Tabulated&) { return evaluate_density(spec, omega) / omega; },
      },
      spec);
}

// Exact integral of J(w)/w over [lo, hi] for a piecewise-linear table.
double tabulated_integral(const Tabulated& tab, double lo, double hi) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < tab.omega.size(); ++j) {
    const double w1 = std::max(tab.omega[j], lo);
    const double w2 = std::min(tab.omega[j + 1], hi);
    if (!(w2 > w1)) continue;
    const double slope = (tab.density[j + 1] - tab.density[j]) / (tab.omega[j + 1] - tab.omega[j]);
    const double intercept = tab.density[j] - slope * tab.omega[j];
    double log_part = 0.0;
    if (intercept != 0.0) {
      log_part = (w1 > 0.0) ? intercept * std::log(w2 / w1)
                            : std::copysign(std::numeric_limits<double>::infinity(), intercept);
    }
    total += log_part + slope * (w2 - w1);
  }
  return total;
}

// Breakpoints that split [lo, hi] into panels, each resolvable by adaptive
// Gauss-Kronrod without missing narrow features.
std::vector<double> panel_breaks(const SpectralDensity& spec, double lo, double hi) {
  const double scale = frequency_scale(spec);
  std::vector<double> pts{lo, hi};
  for (int j = -80; j <= 80; ++j) {
    const double p = scale * std::ldexp(1.0, j);
    if (p > lo && p < hi) pts.push_back(p);
  }
  if (const auto* l = std::get_if<Lorentzian>(&spec)) {
    for (double k : {0.25, 1.0, 4.0, 16.0, 64.0, 256.0}) {
      for (double p : {l->center - k * l->width, l->center + k * l->width})
        if (p > lo && p < hi) pts.push_back(p);
    }
    if (l->center > lo && l->center < hi) pts.push_back(l->center);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

struct PanelSum {
  double value = 0.0;
  double error = 0.0;
};

PanelSum integrate_over_omega(const SpectralDensity& spec, double lo, double hi) {
  PanelSum out;
  if (!(hi > lo)) return out;
  if (const auto* tab = std::get_if<Tabulated>(&spec)) {
    out.value = tabulated_integral(*tab, lo, hi);
    return out;
  }
  const auto breaks = panel_breaks(spec, lo, hi);
  auto f = [&](double w) { return density_over_omega(spec, w); };
  for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
    const auto est = quad::integrate<double>(f, breaks[j], breaks[j + 1], 1e-13, 1e-13);
    out.value += est.value;
    out.error += est.error;
  }
  return out;
}

// Upper truncation: the first doubling of the scale where J(w)/w has fallen
// below 1e-16 of its sampled peak.
double upper_cutoff(const SpectralDensity& spec, double floor) {
  if (const auto* tab = std::get_if<Tabulated>(&spec)) return tab->omega.back();
  const double scale = frequency_scale(spec);
  const double start = std::max(floor, 1e-3 * scale);
  double peak = 0.0;
  double hi = scale;
  for (int doubling = 0; doubling < 200; ++doubling) {
    const double span = std::log(hi / start);
    for (int j = 0; j <= 400; ++j) {
      peak = std::max(peak, density_over_omega(spec, start * std::exp(span * j / 400.0)));
    }
    if (const auto* l = std::get_if<Lorentzian>(&spec); l && l->center > start && l->center < hi)
      peak = std::max(peak, density_over_omega(spec, l->center));
    if (hi > start && density_over_omega(spec, hi) < 1e-16 * peak) return hi;
    hi *= 2.0;
  }
  return hi;
}

}  // namespace

void validate(const SpectralDensity& spec) {
  std::visit(
      Overloaded{
          [](const OhmicFamily& o) {
            if (!(o.s > 0.0)) throw DomainError("ohmic family: exponent s must be > 0");
            if (!(o.eta >= 0.0)) throw DomainError("ohmic family: eta must be >= 0");
            if (!(o.omega_c > 0.0)) throw DomainError("ohmic family: omega_c must be > 0");
          },
          [](const Lorentzian& l) {
            if (!(l.width > 0.0)) throw DomainError("lorentzian: width must be > 0");
            if (!(l.center > 0.0)) throw DomainError("lorentzian: center must be > 0");
            if (!(l.strength >= 0.0)) throw DomainError("lorentzian: strength must be >= 0");
          },
          [](const Tabulated& t) {
            if (t.omega.size() != t.density.size() || t.omega.size() < 2)
              throw DomainError("tabulated density needs >= 2 (omega, J) points of equal length");
            for (std::size_t j = 0; j < t.omega.size(); ++j) {
              if (!(t.density[j] >= 0.0)) throw DomainError("tabulated density: J must be >= 0");
              if (!(t.omega[j] >= 0.0)) throw DomainError("tabulated density: omega must be >= 0");
              if (j > 0 && !(t.omega[j] > t.omega[j - 1]))
                throw DomainError("tabulated density: omega must be strictly increasing");
            }
          },
      },
      spec);
}

double frequency_scale(const SpectralDensity& spec) {
  return std::visit(Overloaded{
                        [](const OhmicFamily& o) { return o.omega_c; },
                        [](const Lorentzian& l) { return l.center; },
                        [](const Tabulated& t) { return t.omega.back(); },
                    },
                    spec);
}

std::string family_name(const SpectralDensity& spec) {
  return std::visit(Overloaded{
                        [](const OhmicFamily&) { return std::string("ohmic"); },
                        [](const Lorentzian&) { return std::string("lorentzian"); },
                        [](const Tabulated&) { return std::string("tabulated"); },
                    },
                    spec);
}

double evaluate_density(const SpectralDensity& spec, double omega) {
  if (!(omega >= 0.0)) throw DomainError("evaluate_density: omega must be >= 0");
  return std::visit(
      Overloaded{
          [&](const OhmicFamily& o) {
            const double x = omega / o.omega_c;
            if (x == 0.0) return 0.0;
            return kTwoPi * o.eta * o.omega_c * std::pow(x, o.s) * std::exp(-x);
          },
          [&](const Lorentzian& l) {
            const double d = omega - l.center;
            return l.strength * l.width * l.width / (d * d + l.width * l.width);
          },
          [&](const Tabulated& t) {
            if (omega < t.omega.front() || omega > t.omega.back()) return 0.0;
            const auto it = std::upper_bound(t.omega.begin(), t.omega.end(), omega);
            const std::size_t j = std::min<std::size_t>(
                static_cast<std::size_t>(std::distance(t.omega.begin(), it)), t.omega.size() - 1);
            const std::size_t i = j - 1;
            const double frac = (omega - t.omega[i]) / (t.omega[j] - t.omega[i]);
            return t.density[i] + frac * (t.density[j] - t.density[i]);
          },
      },
      spec);
}

void GridConfig::validate() const {
  if (n_modes == 0) throw ConfigError("grid: n_modes must be positive");
  if (!(omega_min >= 0.0)) throw ConfigError("grid: omega_min must be >= 0");
  if (!(omega_max > omega_min)) throw ConfigError("grid: omega_max must exceed omega_min");
}

void DiscretizedBath::validate() const {
  if (couplings.cols() != omegas.size())
    throw ConfigError("bath: coupling matrix columns must match the number of modes");
  for (Eigen::Index k = 0; k < omegas.size(); ++k) {
    if (!(omegas[k] > 0.0)) throw DomainError("bath: mode frequencies must be > 0");
    if (k > 0 && !(omegas[k] > omegas[k - 1]))
      throw DomainError("bath: mode frequencies must be strictly increasing");
  }
  if (!couplings.allFinite()) throw DomainError("bath: couplings must be finite");
}

DiscretizedBath DiscretizedBath::replicated(Eigen::Index rows) const {
  DiscretizedBath out = *this;
  out.couplings = couplings.row(0).replicate(rows, 1);
  return out;
}

DiscretizedBath discretize(const SpectralDensity& spec, const GridConfig& grid) {
  validate(spec);
  grid.validate();
  const auto n = static_cast<Eigen::Index>(grid.n_modes);
  DiscretizedBath bath;
  bath.omegas.resize(n);
  bath.couplings.resize(1, n);
  Eigen::VectorXd weights(n);
  if (grid.scheme == GridScheme::LinearMidpoint) {
    const double width = (grid.omega_max - grid.omega_min) / static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      bath.omegas[k] = grid.omega_min + (static_cast<double>(k) + 0.5) * width;
      weights[k] = width;
    }
    bath.uniform_spacing = width;
  } else {
    const auto [nodes, w] = quad::gauss_legendre<double>(grid.n_modes, grid.omega_min, grid.omega_max);
    for (Eigen::Index k = 0; k < n; ++k) {
      bath.omegas[k] = nodes[static_cast<std::size_t>(k)];
      weights[k] = w[static_cast<std::size_t>(k)];
    }
  }
  for (Eigen::Index k = 0; k < n; ++k)
    bath.couplings(0, k) = std::sqrt(evaluate_density(spec, bath.omegas[k]) * weights[k] / kTwoPi);
  bath.validate();
  return bath;
}

StabilityIntegral stability_integral(const SpectralDensity& spec, double omega0, double omega_floor) {
  validate(spec);
  if (!(omega0 > 0.0)) throw DomainError("stability_integral: omega0 must be > 0");
  if (!(omega_floor >= 0.0)) throw DomainError("stability_integral: omega_floor must be >= 0");
  const double prefactor = 4.0 / (kTwoPi * omega0);
  const double hi = upper_cutoff(spec, omega_floor);

  if (omega_floor > 0.0) {
    const auto sum = integrate_over_omega(spec, omega_floor, hi);
    return {prefactor * sum.value, prefactor * sum.error};
  }

  // Limit floor -> 0+: halve the floor repeatedly and watch the increments.
  // Diverges when each of the last three halvings moves the result by more
  // than 1e-3 relative, or when the increments stop shrinking (logarithmic
  // growth).
  const double f0 = 1e-3 * frequency_scale(spec);
  constexpr int kHalvings = 60;
  auto head = integrate_over_omega(spec, f0, hi);
  double running = head.value;
  double error = head.error;
  std::vector<double> increments;
  std::vector<double> rel_changes;
  double floor = f0;
  for (int j = 0; j < kHalvings; ++j) {
    const auto piece = integrate_over_omega(spec, 0.5 * floor, floor);
    floor *= 0.5;
    running += piece.value;
    error += piece.error;
    increments.push_back(piece.value);
    rel_changes.push_back(running != 0.0 ? std::abs(piece.value / running) : 0.0);
  }
  const auto n = increments.size();
  const bool big_changes = !std::isfinite(running) ||
                           (rel_changes[n - 1] > 1e-3 && rel_changes[n - 2] > 1e-3 && rel_changes[n - 3] > 1e-3);
  bool stalled = increments[n - 1] > 0.0;
  for (std::size_t j = n - 3; j + 1 < n && stalled; ++j)
    stalled = increments[j] > 0.0 && increments[j + 1] >= 0.99 * increments[j];
  if (big_changes || stalled) return {std::nullopt, 0.0};

  const auto tail = integrate_over_omega(spec, 0.0, floor);
  return {prefactor * (running + tail.value), prefactor * (error + tail.error)};
}

double critical_coupling(double s, double omega_c, double omega0) {
  if (!(s > 0.0)) throw DomainError("critical_coupling: s must be > 0");
  if (!(omega_c > 0.0)) throw DomainError("critical_coupling: omega_c must be > 0");
  if (!(omega0 > 0.0)) throw DomainError("critical_coupling: omega0 must be > 0");
  return omega0 / (4.0 * omega_c * std::tgamma(s));
}

double discrete_stability_sum(const DiscretizedBath& bath, double omega0, Eigen::Index row) {
  return 4.0 * (bath.couplings.row(row).array().square() / bath.omegas.transpose().array()).sum() / omega0;
}

}  // namespace openqosc
