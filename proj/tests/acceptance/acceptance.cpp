#include "openqosc/config.hpp"
#include "openqosc/errors.hpp"
#include "openqosc/oracle.hpp"
#include "openqosc/presets.hpp"
#include "openqosc/propagator.hpp"
#include "openqosc/spectral.hpp"
#include "openqosc/workflows.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace openqosc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int id, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

RunConfig preset(const std::string& name, const KeyValues& overrides = {}) {
  KeyValues kv = preset_values(name);
  for (const auto& [k, v] : overrides) kv[k] = v;
  return run_config_from(kv);
}

double sup_abs(const GreenTrace& tr) {
  double m = 0.0;
  for (const auto& u : tr.u_values) m = std::max(m, std::abs(u));
  return m;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion1() {
  Timer timer;
  const double ohmic = critical_coupling(1.0, 1.0, 1.0);
  const double subohmic = critical_coupling(0.5, 1.0, 1.0);
  const double target = 1.0 / (4.0 * std::sqrt(std::numbers::pi));
  // The integral is linear in eta; invert it from its unit-eta value.
  const auto inverted = [](double s) {
    const StabilityIntegral si = stability_integral(OhmicFamily{s, 1.0, 1.0}, 1.0);
    return 1.0 / si.value.value();
  };
  const double inv1 = inverted(1.0), inv05 = inverted(0.5);
  const double t = timer.seconds();
  const bool ok = ohmic == 0.25 && std::abs(inv1 - 0.25) <= 1e-6 && std::abs(subohmic - target) <= 1e-6 &&
                  std::abs(inv05 - target) <= 1e-6 && t < 1.0;
  report(1, ok,
         fmt("eta_M(s=1) = %.17g, inverted %.12f; eta_M(s=0.5) = %.12f (1/(4 sqrt pi) = %.12f), inverted %.12f; %.3f s",
             ohmic, inv1, subohmic, target, inv05, t));
}

void criterion2() {
  Timer timer;
  GridConfig grid;
  grid.n_modes = 2048;
  grid.omega_max = 20.0;
  const SystemSpec sys = SystemSpec::single(1.0);
  const DiscretizedBath bath = discretize(OhmicFamily{1.0, 0.25, 1.0}, grid);
  const PotentialMatrix v = build_potential_matrix(sys, bath);
  const StabilityReport rep = classify_stability(v, sys, bath, OhmicFamily{1.0, 0.25, 1.0});
  const double lmin = rep.min_eigenvalue();
  const double eta_bisect = bisect_critical_eta(OhmicFamily{1.0, 0.25, 1.0}, grid, 1.0);
  const double eta_criterion = 0.25 / discrete_stability_sum(bath, 1.0);
  const double t = timer.seconds();
  const bool ok = std::abs(lmin) <= 0.005 && std::abs(eta_bisect - eta_criterion) <= 1e-8 && t < 30.0;
  report(2, ok,
         fmt("min eig(V) = %.3e (%s); eta from bisection %.12f, from 4 sum g^2/(w0 w_k) = 1: %.12f, diff %.2e; %.1f s",
             lmin, stability_name(rep.classification), eta_bisect, eta_criterion, std::abs(eta_bisect - eta_criterion),
             t));
}

struct Criterion3Run {
  double dt;
  double error;
  double end_defect;
};

std::vector<Criterion3Run> criterion3_runs;

void criterion3() {
  Timer timer;
  GridConfig grid;
  grid.n_modes = 256;
  const SystemSpec sys = SystemSpec::single(1.0);
  const DiscretizedBath bath = discretize(OhmicFamily{1.0, 0.1, 1.0}, grid);
  const ExactEvolution exact(sys, bath);
  for (double dt : {0.04, 0.02, 0.01}) {
    PropagationConfig cfg;
    cfg.t_max = 50.0;
    cfg.dt = dt;
    const GreenTrace tr = compose(sys, bath, cfg);
    double err = 0.0;
    for (std::size_t j = 0; j < tr.size(); ++j) err = std::max(err, std::abs(tr.u_values[j] - exact.green_u(tr.times[j])));
    criterion3_runs.push_back({dt, err, tr.defects.back()});
  }
  const double o1 = std::log2(criterion3_runs[0].error / criterion3_runs[1].error);
  const double o2 = std::log2(criterion3_runs[1].error / criterion3_runs[2].error);
  const double t = timer.seconds();
  const bool ok = criterion3_runs[2].error <= 1e-4 && std::min(o1, o2) >= 1.8 && t < 120.0;
  report(3, ok,
         fmt("max |u_step - u_oracle|: %.3e (dt=0.04), %.3e (0.02), %.3e (0.01); orders %.2f, %.2f; %.1f s",
             criterion3_runs[0].error, criterion3_runs[1].error, criterion3_runs[2].error, o1, o2, t));
}

void criterion4() {
  Timer timer;
  // (a) sub-Ohmic, rotating-wave, eta = 0.1: monotone decay to a plateau.
  const RunConfig a = preset("fig2a");
  const GreenTrace ta = compose(a.system, a.bath(), a.propagation);
  const auto onset_a = oscillation_onset(ta);
  double worst_rise = 0.0;
  for (std::size_t j = 1; j < ta.size(); ++j)
    worst_rise = std::max(worst_rise, std::abs(ta.u_values[j]) - std::abs(ta.u_values[j - 1]));
  const bool ok_a1 = !onset_a && !ta.unstable && sup_abs(ta) <= 1.0 + 1e-6;

  // Full coupling, eta = 0.4: instability abort with |u| > 10 before t = 50.
  const RunConfig b = preset("fig2b");
  const GreenTrace tb = compose(b.system, b.bath(), b.propagation);
  double first_over_10 = -1.0;
  for (std::size_t j = 0; j < tb.size(); ++j)
    if (std::abs(tb.u_values[j]) > 10.0) {
      first_over_10 = tb.times[j];
      break;
    }
  const bool ok_a2 = tb.unstable && first_over_10 >= 0.0 && first_over_10 < 50.0;

  // (b) Ohmic eta = 0.25: bounded, |u| varies by at most 10% on [10, 50].
  const RunConfig c = preset("fig3");
  const GreenTrace tc = compose(c.system, c.bath(), c.propagation);
  double lo = 1e300, hi = 0.0;
  for (std::size_t j = 0; j < tc.size(); ++j)
    if (tc.times[j] >= 10.0 - 1e-9 && tc.times[j] <= 50.0 + 1e-9) {
      lo = std::min(lo, std::abs(tc.u_values[j]));
      hi = std::max(hi, std::abs(tc.u_values[j]));
    }
  const double variation = (hi - lo) / hi;
  const bool ok_b = !tc.unstable && sup_abs(tc) <= 1.5 && variation <= 0.10;

  // (c) onset of oscillation: later and weaker for smaller eta.
  const double etas[] = {0.05, 0.1, 0.2};
  double onset[3] = {-1, -1, -1}, amp[3] = {-1, -1, -1};
  for (int i = 0; i < 3; ++i) {
    const RunConfig d = preset("fig4", {{"spectral.eta", std::to_string(etas[i])}});
    const GreenTrace td = compose(d.system, d.bath(), d.propagation);
    if (const auto o = oscillation_onset(td)) onset[i] = *o;
    if (const auto m = oscillation_amplitude(td)) amp[i] = *m;
  }
  const bool have = onset[0] > 0 && onset[1] > 0 && onset[2] > 0;
  const bool ok_c = have && onset[0] > onset[1] && onset[1] > onset[2] && amp[0] < amp[1] && amp[1] < amp[2];
  const double t = timer.seconds();
  report(4, ok_a1 && ok_a2 && ok_b && ok_c && t < 180.0,
         fmt("(a) RWA s=0.5 eta=0.1: onset %s, largest rise %.2e, |u(40)| = %.4f; full eta=0.4: |u| > 10 at t = %.2f, "
             "abort at t = %.2f; (b) eta=0.25 variation on [10,50] = %.2f%%; (c) onsets t*(0.05) = %.2f, t*(0.1) = %.2f, "
             "t*(0.2) = %.2f, amplitudes %.3e < %.3e < %.3e; %.1f s",
             onset_a ? fmt("%.2f", *onset_a).c_str() : "none", worst_rise, std::abs(ta.u_values.back()), first_over_10,
             tb.abort_time.value_or(-1.0), 100.0 * variation, onset[0], onset[1], onset[2], amp[0], amp[1], amp[2], t));
}

void criterion5() {
  Timer timer;
  GridConfig grid;
  grid.n_modes = 256;
  const SystemSpec sys = SystemSpec::single(1.0);
  const DiscretizedBath stable = discretize(OhmicFamily{1.0, 0.1, 1.0}, grid);
  const DiscretizedBath unstable = discretize(OhmicFamily{0.5, 0.4, 1.0}, grid);
  const ExactEvolution es(sys, stable), eu(sys, unstable);
  double ds = 0.0, du = 0.0;
  for (int j = 0; j <= 50; ++j) ds = std::max(ds, bogoliubov_defect(es.matrix(static_cast<double>(j))));
  for (int j = 0; j <= 10; ++j) du = std::max(du, bogoliubov_defect(eu.matrix(static_cast<double>(j))));

  const double d04 = criterion3_runs.size() == 3 ? criterion3_runs[0].end_defect : NAN;
  const double d02 = criterion3_runs.size() == 3 ? criterion3_runs[1].end_defect : NAN;
  const double d01 = criterion3_runs.size() == 3 ? criterion3_runs[2].end_defect : NAN;
  const double order = std::log2(d02 / d01);

  const RunConfig r = preset("fig2a");
  const BogoliubovMatrix step = step_coefficients_rwa(r.system, r.bath(), r.propagation.dt);
  const Index N = step.basis.modes();
  const double anti_block = std::max(step.entries.topRightCorner(N, N).cwiseAbs().maxCoeff(),
                                     step.entries.bottomLeftCorner(N, N).cwiseAbs().maxCoeff());
  const GreenTrace tr = compose(r.system, r.bath(), r.propagation);
  double anti_trace = 0.0;
  for (const auto& a : tr.anti_values) anti_trace = std::max(anti_trace, std::abs(a));
  const double sup = sup_abs(tr);
  const double t = timer.seconds();
  const bool ok = ds <= 1e-10 && du <= 1e-10 && d01 <= 1e-5 && order >= 1.8 && anti_block == 0.0 &&
                  anti_trace == 0.0 && sup <= 1.0 + 1e-6;
  report(5, ok,
         fmt("oracle defect %.2e (stable, t = 0..50), %.2e (unstable, t = 0..10); stepped defect at t=50: %.2e (dt=0.04), "
             "%.2e (0.02), %.2e (0.01), order %.2f; RWA anti blocks max %.1e, anti trace max %.1e, sup |u| - 1 = %.2e; "
             "%.1f s",
             ds, du, d04, d02, d01, order, anti_block, anti_trace, sup - 1.0, t));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void criterion6() {
  Timer timer;
  const double w0 = 1.0;
  const SystemSpec sys = SystemSpec::single(w0);
  DiscretizedBath bath;
  bath.omegas.resize(5);
  bath.omegas << 0.3, 0.7, 1.4, 1.9, 2.6;
  bath.couplings.resize(1, 5);
  bath.couplings << 0.05, 0.11, -0.07, 0.09, 0.03;
  const TaylorCoefficients c = taylor_coefficients(sys, bath, 21, 0, 2);
  auto bracket = [&](double wk, int n) {
    const double q = wk / w0;
    return 1.0 / (q * q - 1.0) * ((std::pow(q, 2 * n) - 1.0) / (q * q - 1.0) - n);
  };
  double worst_closed = 0.0;
  for (int n = 1; n <= 10; ++n) {
    const auto& even = c.by_order[static_cast<std::size_t>(2 * n)];
    const auto& odd = c.by_order[static_cast<std::size_t>(2 * n + 1)];
    double xa = 0.0, pa = 0.0;
    for (Index k = 0; k < 5; ++k) {
      const double wk = bath.omegas[k], g = bath.couplings(0, k);
      const double t1 = 2.0 * g * w0 * (std::pow(w0, 2 * n) - std::pow(wk, 2 * n)) / (w0 * w0 - wk * wk);
      worst_closed = std::max(worst_closed, rel(even[1][c.x_b(k)], t1));
      worst_closed = std::max(worst_closed, rel(odd[1][c.p_b(k)], wk * t1));
      xa += 4.0 * g * g * std::pow(w0, 2 * n - 3) * wk * bracket(wk, n);
      pa += 4.0 * g * g * std::pow(w0, 2 * n - 2) * wk * bracket(wk, n);
    }
    worst_closed = std::max(worst_closed, n == 1 ? std::abs(even[2][c.x_a(0)] - xa) : rel(even[2][c.x_a(0)], xa));
    worst_closed = std::max(worst_closed, rel(odd[2][c.p_a(0)], pa));
  }

  double worst_chain = 0.0;
  for (Index K : {3, 6}) {
    DiscretizedBath b;
    b.omegas = Eigen::VectorXd::LinSpaced(K, 0.35, 2.6);
    b.couplings = Eigen::MatrixXd::Constant(1, K, 0.12);
    for (Index k = 0; k < K; ++k) b.couplings(0, k) *= 1.0 + 0.3 * std::sin(static_cast<double>(k));
    for (double t : {0.5, 1.5}) {
      const auto rows = taylor_evaluate_orders(taylor_coefficients(sys, b, 140, 0, 6), t);
      for (int n = 1; n <= 3; ++n) {
        const ChainTerm ch = chain_term(sys, b, n, t);
        worst_chain = std::max(worst_chain, (ch.odd.row(0).transpose() - rows[static_cast<std::size_t>(2 * n - 1)]).cwiseAbs().maxCoeff());
        worst_chain = std::max(worst_chain, (ch.even.row(0).transpose() - rows[static_cast<std::size_t>(2 * n)]).cwiseAbs().maxCoeff());
      }
    }
  }

  double worst_step = 0.0;
  {
    GridConfig grid;
    grid.n_modes = 6;
    grid.omega_max = 4.0;
    const DiscretizedBath b = discretize(OhmicFamily{1.0, 0.1, 1.0}, grid);
    for (double dt : {0.1, 0.05, 0.01}) {
      const BogoliubovMatrix m = step_coefficients_full(sys, b, dt);
      const auto rows = taylor_evaluate_orders(taylor_coefficients(sys, b, 40, 0, 2), dt);
      worst_step = std::max(worst_step, (m.entries.row(0).transpose() - (rows[0] + rows[1] + rows[2])).cwiseAbs().maxCoeff());
    }
  }
  const double t = timer.seconds();
  report(6, worst_closed <= 1e-12 && worst_chain <= 1e-8 && worst_step <= 1e-10,
         fmt("Taylor vs closed forms (n <= 10, 5 modes) max rel %.2e; chain_term vs Taylor (n <= 3, K = 3, 6) %.2e; "
             "step vs Taylor truncation (dt <= 0.1) %.2e; %.2f s",
             worst_closed, worst_chain, worst_step, t));
}

void criterion7() {
  const RunConfig cfg = preset("fig1-lorentzian");
  bool all = true;
  std::string strengths;
  for (double s : {1e-8, 1e-3, 0.01, 1.0, 100.0}) {
    const Lorentzian base = std::get<Lorentzian>(cfg.spectral);
    const StabilityIntegral si = stability_integral(Lorentzian{base.center, base.width, s}, cfg.system.omega0());
    all = all && si.divergent();
    strengths += fmt(" %g:%s", s, si.divergent() ? "divergent" : "finite");
  }
  std::ostringstream text;
  const StabilityOutcome out = run_stability(cfg, text);
  const bool warned =
      out.divergence_warning && text.str().find("WARNING: the stability integral does not converge") != std::string::npos;
  report(7, all && warned,
         fmt("Lorentzian stability integral by strength:%s; run_stability warning %s", strengths.c_str(),
             warned ? "issued" : "missing"));
}

void criterion8() {
  Timer timer;
  const fs::path root = fs::temp_directory_path() / "openqosc_acceptance_sweep";
  std::uint64_t hash[2] = {0, 0};
  std::size_t files = 0;
  bool same = true;
  std::vector<std::string> first;
  int idx = 0;
  for (std::size_t par : {1u, 8u}) {
    const fs::path out = root / std::to_string(par);
    fs::remove_all(out);
    KeyValues kv = preset_values("fig4");
    kv["propagation.t_max"] = "50";
    kv["sweep.values"] = "0.05, 0.1, 0.2";
    kv["output.dir"] = out.string();
    std::ostringstream log;
    const SweepOutcome s = run_sweep(sweep_config_from(kv), par, log);
    std::vector<std::string> contents;
    for (const auto& p : s.points) contents.push_back(slurp(p.csv_path));
    contents.push_back(slurp(s.summary_path));
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& c : contents) h = fnv1a(c, h);
    hash[idx++] = h;
    files = contents.size();
    if (first.empty())
      first = contents;
    else
      same = same && first == contents;
  }
  fs::remove_all(root);
  const double t = timer.seconds();
  report(8, same && hash[0] == hash[1] && files == 4,
         fmt("%zu CSV files per run; FNV-1a hash %016llx (parallelism 1) vs %016llx (parallelism 8); %.1f s", files,
             static_cast<unsigned long long>(hash[0]), static_cast<unsigned long long>(hash[1]), t));
}

}  // namespace

int main() {
  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
