#include "openqosc/bch_coeffs.hpp"

#include "openqosc/divided_difference.hpp"
#include "openqosc/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>

namespace openqosc {

namespace {

constexpr Complex kI{0.0, 1.0};

Complex phase(double lambda, double t) { return dd::phase(lambda, t); }
Complex h2(double a, double b, double t) { return dd::phase_dd(a, b, t); }
Complex h3(double a, double b, double c, double t) { return dd::phase_dd(a, b, c, t); }

bool near(double a, double b, double scale) {
  return std::abs(a - b) < kernels::kResonanceThreshold * std::max(1.0, scale);
}

void check_inputs(const SystemSpec& system, const DiscretizedBath& bath, double dt) {
  if (!(dt > 0.0)) throw DomainError("step coefficients: dt must be > 0");
  system.validate();
  bath.validate();
  if (bath.system_rows() != system.size())
    throw ConfigError("bath coupling rows must match the number of system oscillators");
}

// Second-order kernels via divided differences only.
Complex self_annihilator_dd(double x, double m, double g, double t) {
  return g * g * (h3(x, m, x, t) - h3(x, -m, x, t));
}
Complex self_creator_dd(double x, double m, double g, double t) {
  return g * g * (h3(x, m, -x, t) - h3(x, -m, -x, t));
}
Complex transfer_annihilator_dd(double x, double m, double z, double gx, double gz, double t) {
  return gx * gz * (h3(x, m, z, t) - h3(x, -m, z, t));
}
Complex transfer_creator_dd(double x, double m, double z, double gx, double gz, double t) {
  return gx * gz * (h3(x, m, -z, t) - h3(x, -m, -z, t));
}

struct ClosedForms {
  static Complex self_ann(double x, double m, double g, double t) { return kernels::self_annihilator(x, m, g, t); }
  static Complex self_cre(double x, double m, double g, double t) { return kernels::self_creator(x, m, g, t); }
  static Complex transfer_ann(double x, double m, double z, double gx, double gz, double t) {
    return kernels::transfer_annihilator(x, m, z, gx, gz, t);
  }
  static Complex transfer_cre(double x, double m, double z, double gx, double gz, double t) {
    return kernels::transfer_creator(x, m, z, gx, gz, t);
  }
  static Complex rwa_self(double x, double m, double g, double t) { return kernels::rwa_self(x, m, g, t); }
  static Complex rwa_transfer(double x, double m, double z, double gx, double gz, double t) {
    return kernels::rwa_transfer(x, m, z, gx, gz, t);
  }
};

struct DividedDifferences {
  static Complex self_ann(double x, double m, double g, double t) { return self_annihilator_dd(x, m, g, t); }
  static Complex self_cre(double x, double m, double g, double t) { return self_creator_dd(x, m, g, t); }
  static Complex transfer_ann(double x, double m, double z, double gx, double gz, double t) {
    return transfer_annihilator_dd(x, m, z, gx, gz, t);
  }
  static Complex transfer_cre(double x, double m, double z, double gx, double gz, double t) {
    return transfer_creator_dd(x, m, z, gx, gz, t);
  }
  static Complex rwa_self(double x, double m, double g, double t) { return g * g * h3(x, m, x, t); }
  static Complex rwa_transfer(double x, double m, double z, double gx, double gz, double t) {
    return gx * gz * h3(x, m, z, t);
  }
};

// Annihilation rows are assembled explicitly; creation rows follow from
// M[conj r, conj c] = conj(M[r, c]).
template <class Kernels>
BogoliubovMatrix assemble_step(const SystemSpec& system, const DiscretizedBath& bath, double dt,
                               CouplingMode mode) {
  check_inputs(system, bath, dt);
  const Index S = system.size();
  const Index K = bath.modes();
  const OperatorBasis basis(S, K);
  const Eigen::MatrixXd& g = bath.couplings;
  const Eigen::VectorXd& Om = system.omegas;
  const Eigen::VectorXd& w = bath.omegas;
  const bool full = mode == CouplingMode::FullCoupling;

  BogoliubovMatrix out;
  out.basis = basis;
  out.time = dt;
  out.entries = Eigen::MatrixXcd::Zero(basis.dimension(), basis.dimension());
  auto& M = out.entries;

  for (Index i = 0; i < S; ++i) M(basis.a(i), basis.a(i)) = phase(Om[i], dt);
  for (Index k = 0; k < K; ++k) M(basis.b(k), basis.b(k)) = phase(w[k], dt);

  // First order.
  for (Index i = 0; i < S; ++i) {
    for (Index k = 0; k < K; ++k) {
      const double gik = g(i, k);
      if (gik == 0.0) continue;
      M(basis.a(i), basis.b(k)) = gik * h2(Om[i], w[k], dt);
      M(basis.b(k), basis.a(i)) = gik * h2(w[k], Om[i], dt);
      if (full) {
        M(basis.a(i), basis.b_dag(k)) = gik * h2(Om[i], -w[k], dt);
        M(basis.b(k), basis.a_dag(i)) = gik * h2(w[k], -Om[i], dt);
      }
    }
  }

  // Second order, system rows: intermediate bath modes.
  for (Index i = 0; i < S; ++i) {
    for (Index j = 0; j < S; ++j) {
      Complex ann = 0.0, cre = 0.0;
      for (Index k = 0; k < K; ++k) {
        const double gi = g(i, k), gj = g(j, k);
        if (gi == 0.0 || gj == 0.0) continue;
        if (full) {
          if (i == j) {
            ann += Kernels::self_ann(Om[i], w[k], gi, dt);
            cre += Kernels::self_cre(Om[i], w[k], gi, dt);
          } else {
            ann += Kernels::transfer_ann(Om[i], w[k], Om[j], gi, gj, dt);
            cre += Kernels::transfer_cre(Om[i], w[k], Om[j], gi, gj, dt);
          }
        } else {
          ann += (i == j) ? Kernels::rwa_self(Om[i], w[k], gi, dt)
                          : Kernels::rwa_transfer(Om[i], w[k], Om[j], gi, gj, dt);
        }
      }
      M(basis.a(i), basis.a(j)) += ann;
      if (full) M(basis.a(i), basis.a_dag(j)) += cre;
    }
  }

  // Second order, bath rows: intermediate system oscillators.
  for (Index k = 0; k < K; ++k) {
    for (Index kp = 0; kp < K; ++kp) {
      Complex ann = 0.0, cre = 0.0;
      for (Index i = 0; i < S; ++i) {
        const double gk = g(i, k), gkp = g(i, kp);
        if (gk == 0.0 || gkp == 0.0) continue;
        if (full) {
          if (k == kp) {
            ann += Kernels::self_ann(w[k], Om[i], gk, dt);
            cre += Kernels::self_cre(w[k], Om[i], gk, dt);
          } else {
            ann += Kernels::transfer_ann(w[k], Om[i], w[kp], gk, gkp, dt);
            cre += Kernels::transfer_cre(w[k], Om[i], w[kp], gk, gkp, dt);
          }
        } else {
          ann += (k == kp) ? Kernels::rwa_self(w[k], Om[i], gk, dt)
                           : Kernels::rwa_transfer(w[k], Om[i], w[kp], gk, gkp, dt);
        }
      }
      M(basis.b(k), basis.b(kp)) += ann;
      if (full) M(basis.b(k), basis.b_dag(kp)) += cre;
    }
  }

  const Index N = basis.modes();
  M.bottomRightCorner(N, N) = M.topLeftCorner(N, N).conjugate();
  M.bottomLeftCorner(N, N) = M.topRightCorner(N, N).conjugate();
  return out;
}

// Real X/P coefficient vector (or complex) mapped to the ladder basis:
// c_X X + c_P P = (c_X - c_P) a + (c_X + c_P) a^+.
Eigen::VectorXcd xp_to_ladder(const Eigen::VectorXcd& c, Index S, Index K) {
  const OperatorBasis basis(S, K);
  Eigen::VectorXcd row = Eigen::VectorXcd::Zero(basis.dimension());
  for (Index i = 0; i < S; ++i) {
    const Complex cx = c[i], cp = c[S + i];
    row[basis.a(i)] = cx - cp;
    row[basis.a_dag(i)] = cx + cp;
  }
  for (Index k = 0; k < K; ++k) {
    const Complex cx = c[2 * S + k], cp = c[2 * S + K + k];
    row[basis.b(k)] = cx - cp;
    row[basis.b_dag(k)] = cx + cp;
  }
  return row;
}

Eigen::VectorXd free_commutator(const Eigen::VectorXd& v, const SystemSpec& system, const DiscretizedBath& bath) {
  const Index S = system.size(), K = bath.modes();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  out.segment(0, S) = system.omegas.cwiseProduct(v.segment(S, S));
  out.segment(S, S) = system.omegas.cwiseProduct(v.segment(0, S));
  out.segment(2 * S, K) = bath.omegas.cwiseProduct(v.segment(2 * S + K, K));
  out.segment(2 * S + K, K) = bath.omegas.cwiseProduct(v.segment(2 * S, K));
  return out;
}

Eigen::VectorXd coupling_commutator(const Eigen::VectorXd& v, const SystemSpec& system,
                                    const DiscretizedBath& bath) {
  const Index S = system.size(), K = bath.modes();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  // [H, P_a,i] picks up 2 sum_k g_ik X_b,k; [H, P_b,k] picks up 2 sum_i g_ik X_a,i.
  out.segment(2 * S, K) = 2.0 * bath.couplings.transpose() * v.segment(S, S);
  out.segment(0, S) = 2.0 * bath.couplings * v.segment(2 * S + K, K);
  return out;
}

struct SeriesSums {
  std::vector<Eigen::VectorXcd> x;  // per entry: one block (full) or per order
  std::vector<Eigen::VectorXcd> p;
};

// Accumulates sum_n (it)^n/n! V_n for X and sum_n (it)^n/n! V_{n+1}/Omega for P,
// where V_n is selected by `pick`. Checks the last-term criterion on the full
// vectors.
template <class Pick>
void accumulate_series(const TaylorCoefficients& c, double t, std::size_t blocks, Pick&& pick, SeriesSums& sums) {
  const int N = c.order();
  if (N < 1) throw DomainError("taylor_evaluate: order must be >= 1");
  const Index dim = c.vectors.front().size();
  sums.x.assign(blocks, Eigen::VectorXcd::Zero(dim));
  sums.p.assign(blocks, Eigen::VectorXcd::Zero(dim));
  Complex factor = 1.0;  // (it)^n / n!
  double largest = 0.0, last_x = 0.0, last_p = 0.0;
  for (int n = 0; n <= N; ++n) {
    const double norm_x = std::abs(factor) * c.vectors[static_cast<std::size_t>(n)].cwiseAbs().maxCoeff();
    largest = std::max(largest, norm_x);
    last_x = norm_x;
    for (std::size_t b = 0; b < blocks; ++b) sums.x[b] += factor * pick(n, b).template cast<Complex>();
    if (n < N) {
      const double norm_p = std::abs(factor) *
                            c.vectors[static_cast<std::size_t>(n + 1)].cwiseAbs().maxCoeff() / c.seed_frequency;
      largest = std::max(largest, norm_p);
      last_p = norm_p;
      for (std::size_t b = 0; b < blocks; ++b)
        sums.p[b] += (factor / c.seed_frequency) * pick(n + 1, b).template cast<Complex>();
    }
    factor *= kI * t / static_cast<double>(n + 1);
  }
  const double bound = std::max(last_x, last_p);
  if (bound > 1e-12 * largest) {
    throw TruncationError("taylor_evaluate: series not converged at order " + std::to_string(N) +
                              " (last term / largest term = " + std::to_string(bound / largest) + ")",
                          bound);
  }
}

// Divided difference over squared frequencies for the chain sums.
enum class ChainFunction { Cos, Sinc, XSin };

class ChainDivider {
 public:
  ChainDivider(double t, double max_node) : t_(t) {
    if (max_node * t * t > 400.0)
      throw DomainError("chain_term: omega_max * t too large for the validation series");
    constexpr int kTerms = 90;
    cos_.resize(kTerms);
    sinc_.resize(kTerms);
    xsin_.assign(kTerms + 1, 0.0);
    double c = 1.0;  // t^(2j) / (2j)!
    double s = t;    // t^(2j+1) / (2j+1)!
    for (int j = 0; j < kTerms; ++j) {
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      cos_[static_cast<std::size_t>(j)] = sign * c;
      sinc_[static_cast<std::size_t>(j)] = sign * s;
      xsin_[static_cast<std::size_t>(j + 1)] = sign * s;
      c *= t * t / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
      s *= t * t / ((2.0 * j + 2.0) * (2.0 * j + 3.0));
    }
  }

  double operator()(ChainFunction f, std::span<const double> nodes) const {
    double top = 1.0;
    for (double x : nodes) top = std::max(top, std::abs(x));
    bool separated = true;
    for (std::size_t a = 0; a < nodes.size() && separated; ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b)
        if (std::abs(nodes[a] - nodes[b]) < 1e-2 * top) {
          separated = false;
          break;
        }
    if (separated) {
      auto fn = [&](double x) { return evaluate(f, x); };
      return dd::partial_fraction_dd<double>(fn, nodes);
    }
    const auto& coeffs = f == ChainFunction::Cos ? cos_ : (f == ChainFunction::Sinc ? sinc_ : xsin_);
    return dd::series_dd<double>(std::span<const double>(coeffs), nodes);
  }

 private:
  double evaluate(ChainFunction f, double x) const {
    const double r = std::sqrt(x);
    switch (f) {
      case ChainFunction::Cos: return std::cos(r * t_);
      case ChainFunction::Sinc: return std::sin(r * t_) / r;
      case ChainFunction::XSin: return r * std::sin(r * t_);
    }
    return 0.0;
  }

  double t_;
  std::vector<double> cos_, sinc_, xsin_;
};

}  // namespace

SystemSpec SystemSpec::single(double omega0) {
  SystemSpec s;
  s.omegas = Eigen::VectorXd::Constant(1, omega0);
  return s;
}

void SystemSpec::validate() const {
  if (omegas.size() == 0) throw ConfigError("system: at least one oscillator required");
  for (Index i = 0; i < omegas.size(); ++i)
    if (!(omegas[i] > 0.0)) throw DomainError("system: oscillator frequencies must be > 0");
}

Eigen::VectorXd OperatorBasis::metric() const {
  Eigen::VectorXd m(dimension());
  m.head(modes()).setOnes();
  m.tail(modes()).setConstant(-1.0);
  return m;
}

BogoliubovMatrix BogoliubovMatrix::identity(const OperatorBasis& basis) {
  return {Eigen::MatrixXcd::Identity(basis.dimension(), basis.dimension()), 0.0, basis};
}

namespace kernels {

Complex self_annihilator(double x, double mid, double g, double t) {
  if (near(x, mid, std::max(x, mid))) return self_annihilator_dd(x, mid, g, t);
  const double d2 = x * x - mid * mid;
  const Complex bracket = (x + mid) * (x + mid) * std::sin(mid * t) + d2 * mid * t * phase(x, t) +
                          2.0 * kI * x * mid * (phase(-mid, t) - phase(x, t));
  return -2.0 * kI * g * g / (d2 * d2) * bracket;
}

Complex self_creator(double x, double mid, double g, double t) {
  if (near(x, mid, std::max(x, mid))) return self_creator_dd(x, mid, g, t);
  const double d2 = x * x - mid * mid;
  return 2.0 * kI * g * g / (x * d2) * (x * std::sin(mid * t) - mid * std::sin(x * t));
}

Complex transfer_annihilator(double x, double mid, double z, double gx, double gz, double t) {
  const double top = std::max({x, mid, z});
  if (near(x, mid, top) || near(z, mid, top) || near(x, z, top))
    return transfer_annihilator_dd(x, mid, z, gx, gz, t);
  const double m2 = mid * mid;
  const Complex bracket = -kI * (x - z) * (m2 + x * z) * std::sin(mid * t) +
                          mid * (x * x - z * z) * std::cos(mid * t) + mid * (m2 - x * x) * phase(z, t) -
                          mid * (m2 - z * z) * phase(x, t);
  return -2.0 * gx * gz / ((m2 - x * x) * (x - z) * (z * z - m2)) * bracket;
}

Complex transfer_creator(double x, double mid, double z, double gx, double gz, double t) {
  const double top = std::max({x, mid, z});
  if (near(x, mid, top) || near(z, mid, top)) return transfer_creator_dd(x, mid, z, gx, gz, t);
  const double m2 = mid * mid;
  const Complex bracket = -kI * (x + z) * (x * z - m2) * std::sin(mid * t) +
                          mid * (z * z - x * x) * std::cos(mid * t) + mid * (x * x - m2) * phase(-z, t) +
                          mid * (m2 - z * z) * phase(x, t);
  return 2.0 * gx * gz / ((m2 - x * x) * (x + z) * (z * z - m2)) * bracket;
}

Complex rwa_self(double x, double mid, double g, double t) {
  if (near(x, mid, std::max(x, mid))) return g * g * h3(x, mid, x, t);
  const double d = mid - x;
  return g * g / (d * d) * (phase(mid, t) - (1.0 - kI * mid * t + kI * x * t) * phase(x, t));
}

Complex rwa_transfer(double x, double mid, double z, double gx, double gz, double t) {
  const double top = std::max({x, mid, z});
  if (near(x, mid, top) || near(z, mid, top) || near(x, z, top)) return gx * gz * h3(x, mid, z, t);
  return gx * gz *
         (phase(x, t) / ((x - mid) * (x - z)) + phase(mid, t) / ((mid - x) * (mid - z)) +
          phase(z, t) / ((z - x) * (z - mid)));
}

}  // namespace kernels

BogoliubovMatrix step_coefficients_full(const SystemSpec& system, const DiscretizedBath& bath, double dt) {
  return assemble_step<ClosedForms>(system, bath, dt, CouplingMode::FullCoupling);
}

BogoliubovMatrix step_coefficients_rwa(const SystemSpec& system, const DiscretizedBath& bath, double dt) {
  return assemble_step<ClosedForms>(system, bath, dt, CouplingMode::RWA);
}

BogoliubovMatrix step_coefficients(const SystemSpec& system, const DiscretizedBath& bath, double dt,
                                   CouplingMode mode) {
  return assemble_step<ClosedForms>(system, bath, dt, mode);
}

BogoliubovMatrix step_coefficients_divided_difference(const SystemSpec& system, const DiscretizedBath& bath,
                                                      double dt, CouplingMode mode) {
  return assemble_step<DividedDifferences>(system, bath, dt, mode);
}

TaylorCoefficients taylor_coefficients(const SystemSpec& system, const DiscretizedBath& bath, int order,
                                       Index seed, int max_g_order) {
  if (order < 0) throw DomainError("taylor_coefficients: order must be >= 0");
  if (max_g_order < 0) throw DomainError("taylor_coefficients: max_g_order must be >= 0");
  system.validate();
  bath.validate();
  if (seed < 0 || seed >= system.size()) throw DomainError("taylor_coefficients: seed out of range");
  const Index S = system.size(), K = bath.modes();
  const Index dim = 2 * (S + K);

  TaylorCoefficients c;
  c.n_system = S;
  c.n_bath = K;
  c.seed = seed;
  c.seed_frequency = system.omegas[seed];
  c.max_g_order = max_g_order;
  const auto blocks = static_cast<std::size_t>(max_g_order) + 1;

  Eigen::VectorXd t0 = Eigen::VectorXd::Zero(dim);
  t0[c.x_a(seed)] = 1.0;
  c.vectors.push_back(t0);
  std::vector<Eigen::VectorXd> first(blocks, Eigen::VectorXd::Zero(dim));
  first[0] = t0;
  c.by_order.push_back(first);

  for (int n = 1; n <= order; ++n) {
    const auto& prev = c.vectors.back();
    c.vectors.push_back(free_commutator(prev, system, bath) + coupling_commutator(prev, system, bath));
    const auto& prev_orders = c.by_order.back();
    std::vector<Eigen::VectorXd> next(blocks);
    for (std::size_t p = 0; p < blocks; ++p) {
      next[p] = free_commutator(prev_orders[p], system, bath);
      if (p > 0) next[p] += coupling_commutator(prev_orders[p - 1], system, bath);
    }
    c.by_order.push_back(std::move(next));
  }
  return c;
}

Eigen::VectorXcd taylor_evaluate(const TaylorCoefficients& coeffs, double t) {
  SeriesSums sums;
  accumulate_series(coeffs, t, 1, [&](int n, std::size_t) -> const Eigen::VectorXd& {
    return coeffs.vectors[static_cast<std::size_t>(n)];
  }, sums);
  const Eigen::VectorXcd x = xp_to_ladder(sums.x[0], coeffs.n_system, coeffs.n_bath);
  const Eigen::VectorXcd p = xp_to_ladder(sums.p[0], coeffs.n_system, coeffs.n_bath);
  return 0.5 * (x - p);
}

std::vector<Eigen::VectorXcd> taylor_evaluate_orders(const TaylorCoefficients& coeffs, double t) {
  SeriesSums sums;
  const auto blocks = static_cast<std::size_t>(coeffs.max_g_order) + 1;
  accumulate_series(coeffs, t, blocks, [&](int n, std::size_t p) -> const Eigen::VectorXd& {
    return coeffs.by_order[static_cast<std::size_t>(n)][p];
  }, sums);
  std::vector<Eigen::VectorXcd> rows;
  rows.reserve(blocks);
  for (std::size_t p = 0; p < blocks; ++p) {
    rows.push_back(0.5 * (xp_to_ladder(sums.x[p], coeffs.n_system, coeffs.n_bath) -
                          xp_to_ladder(sums.p[p], coeffs.n_system, coeffs.n_bath)));
  }
  return rows;
}

Eigen::VectorXcd taylor_evaluate_x(const TaylorCoefficients& coeffs, double t) {
  SeriesSums sums;
  accumulate_series(coeffs, t, 1, [&](int n, std::size_t) -> const Eigen::VectorXd& {
    return coeffs.vectors[static_cast<std::size_t>(n)];
  }, sums);
  return xp_to_ladder(sums.x[0], coeffs.n_system, coeffs.n_bath);
}

Eigen::VectorXcd rwa_taylor_evaluate(const SystemSpec& system, const DiscretizedBath& bath, double t,
                                     int order, Index seed) {
  system.validate();
  bath.validate();
  const Index S = system.size(), K = bath.modes();
  const Index N = S + K;
  // One-particle matrix h; [H_R, sum c_j e_j] = sum_l (-h c)_l e_l.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(N, N);
  h.diagonal().head(S) = system.omegas;
  h.diagonal().tail(K) = bath.omegas;
  h.topRightCorner(S, K) = bath.couplings;
  h.bottomLeftCorner(K, S) = bath.couplings.transpose();

  Eigen::VectorXd term = Eigen::VectorXd::Zero(N);
  term[seed] = 1.0;
  Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(N);
  Complex factor = 1.0;
  double largest = 0.0, last = 0.0;
  for (int n = 0; n <= order; ++n) {
    last = std::abs(factor) * term.cwiseAbs().maxCoeff();
    largest = std::max(largest, last);
    sum += factor * term.cast<Complex>();
    term = -(h * term);
    factor *= kI * t / static_cast<double>(n + 1);
  }
  if (last > 1e-12 * largest)
    throw TruncationError("rwa_taylor_evaluate: series not converged at order " + std::to_string(order), last);
  Eigen::VectorXcd row = Eigen::VectorXcd::Zero(2 * N);
  row.head(N) = sum;
  return row;
}

ChainTerm chain_term(const SystemSpec& system, const DiscretizedBath& bath, int n, double t) {
  if (n < 1 || n > 3) throw DomainError("chain_term: n must lie in [1, 3]");
  system.validate();
  bath.validate();
  const Index S = system.size(), K = bath.modes();
  if (bath.system_rows() != S) throw ConfigError("bath coupling rows must match the number of system oscillators");

  std::vector<double> freqs(system.omegas.data(), system.omegas.data() + S);
  freqs.insert(freqs.end(), bath.omegas.data(), bath.omegas.data() + K);
  for (std::size_t a = 0; a < freqs.size(); ++a)
    for (std::size_t b = a + 1; b < freqs.size(); ++b)
      if (std::abs(freqs[a] - freqs[b]) <= 1e-9 * std::max(freqs[a], freqs[b]))
        throw DegenerateSpectrumError("chain_term: coinciding mode frequencies");

  const double top = *std::max_element(freqs.begin(), freqs.end());
  const ChainDivider divide(t, top * top);
  const OperatorBasis basis(S, K);
  const Eigen::MatrixXd& g = bath.couplings;
  const Eigen::VectorXd& Om = system.omegas;
  const Eigen::VectorXd& w = bath.omegas;

  ChainTerm out;
  out.n = n;
  out.odd = Eigen::MatrixXcd::Zero(S, basis.dimension());
  out.even = Eigen::MatrixXcd::Zero(S, basis.dimension());

  const double pow_odd = std::ldexp(1.0, 2 * n - 1);
  const double pow_even = std::ldexp(1.0, 2 * n);
  std::vector<Index> is(static_cast<std::size_t>(n)), ks(static_cast<std::size_t>(n));
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(2 * n + 1));

  for (Index i1 = 0; i1 < S; ++i1) {
    Eigen::VectorXcd x_odd = Eigen::VectorXcd::Zero(basis.dimension());
    Eigen::VectorXcd p_odd = x_odd, x_even = x_odd, p_even = x_odd;
    auto add_x = [&](Eigen::VectorXcd& row, Index annihilator, Index creator, Complex c) {
      row[annihilator] += c;
      row[creator] += c;
    };
    auto add_p = [&](Eigen::VectorXcd& row, Index annihilator, Index creator, Complex c) {
      row[annihilator] -= c;
      row[creator] += c;
    };

    // Odometer over i_2..i_n and k_1..k_n.
    const Index chains_i = static_cast<Index>(std::pow(static_cast<double>(S), n - 1));
    const Index chains_k = static_cast<Index>(std::pow(static_cast<double>(K), n));
    for (Index ci = 0; ci < chains_i; ++ci) {
      is[0] = i1;
      for (Index r = 1, rest = ci; r < n; ++r, rest /= S) is[static_cast<std::size_t>(r)] = rest % S;
      for (Index ck = 0; ck < chains_k; ++ck) {
        for (Index r = 0, rest = ck; r < n; ++r, rest /= K) ks[static_cast<std::size_t>(r)] = rest % K;
        auto I = [&](int l) { return is[static_cast<std::size_t>(l)]; };
        auto Kx = [&](int l) { return ks[static_cast<std::size_t>(l)]; };

        double pref = g(i1, Kx(0));
        for (int r = 1; r < n; ++r) pref *= g(I(r), Kx(r - 1)) * g(I(r), Kx(r));
        if (pref == 0.0) continue;

        nodes.clear();
        for (int l = 0; l < n; ++l) nodes.push_back(Om[I(l)] * Om[I(l)]);
        for (int l = 0; l < n; ++l) nodes.push_back(w[Kx(l)] * w[Kx(l)]);
        const Index kn = Kx(n - 1);

        double prod_lead = 1.0;   // prod_{m=1}^{n-1} Omega_{i_m} w_{k_m}
        double prod_all = 1.0;    // prod_{m=1}^{n} Omega_{i_m} w_{k_m}
        double prod_tail = w[Kx(0)];  // w_{k_1} prod_{m=2}^{n} Omega_{i_m} w_{k_m}
        double prod_shift = 1.0;  // prod_{m=1}^{n-1} Omega_{i_{m+1}} w_{k_m}
        for (int m = 0; m < n; ++m) {
          prod_all *= Om[I(m)] * w[Kx(m)];
          if (m < n - 1) {
            prod_lead *= Om[I(m)] * w[Kx(m)];
            prod_shift *= Om[I(m + 1)] * w[Kx(m)];
          }
          if (m > 0) prod_tail *= Om[I(m)] * w[Kx(m)];
        }

        const std::span<const double> odd_nodes(nodes.data(), nodes.size());
        const double cos_odd = divide(ChainFunction::Cos, odd_nodes);
        const double sinc_odd = divide(ChainFunction::Sinc, odd_nodes);
        const double xsin_odd = divide(ChainFunction::XSin, odd_nodes);

        // X_a(t): X_b and P_b chain sums.
        add_x(x_odd, basis.b(kn), basis.b_dag(kn), pow_odd * pref * prod_lead * Om[I(n - 1)] * cos_odd);
        add_p(x_odd, basis.b(kn), basis.b_dag(kn), kI * pow_odd * pref * prod_all * sinc_odd);
        // P_a(t).
        add_p(p_odd, basis.b(kn), basis.b_dag(kn), pow_odd * pref * prod_tail * cos_odd);
        add_x(p_odd, basis.b(kn), basis.b_dag(kn), kI * pow_odd * pref * prod_shift * xsin_odd);

        for (Index inext = 0; inext < S; ++inext) {
          const double gl = g(inext, kn);
          if (gl == 0.0) continue;
          nodes.push_back(Om[inext] * Om[inext]);
          const std::span<const double> even_nodes(nodes.data(), nodes.size());
          const double cos_even = divide(ChainFunction::Cos, even_nodes);
          const double sinc_even = divide(ChainFunction::Sinc, even_nodes);
          const double xsin_even = divide(ChainFunction::XSin, even_nodes);
          nodes.pop_back();

          const double base = pow_even * pref * gl;
          // prod_{m=1}^{n} Omega_{i_{m+1}} w_{k_m} with i_{n+1} = inext.
          const double prod_next = prod_shift * Om[inext] * w[kn];
          add_x(x_even, basis.a(inext), basis.a_dag(inext), base * prod_all * cos_even);
          add_p(x_even, basis.a(inext), basis.a_dag(inext), kI * base * prod_all * Om[inext] * sinc_even);
          add_p(p_even, basis.a(inext), basis.a_dag(inext), base * prod_next * cos_even);
          add_x(p_even, basis.a(inext), basis.a_dag(inext), kI * base * prod_tail * xsin_even);
        }
      }
    }
    out.odd.row(i1) = (0.5 * (x_odd - p_odd)).transpose();
    out.even.row(i1) = (0.5 * (x_even - p_even)).transpose();
  }
  return out;
}

}  // namespace openqosc
