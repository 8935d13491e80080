#include "openqosc/workflows.hpp"

#include "openqosc/csv.hpp"
#include "openqosc/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

namespace openqosc {

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

GreenTrace propagate_and_write(const RunConfig& cfg, const DiscretizedBath& bath, const std::filesystem::path& csv,
                               const std::filesystem::path& meta) {
  GreenTrace trace = compose(cfg.system, bath, cfg.propagation);
  write_file(csv, trace_csv(trace));
  write_file(meta, format_key_values(trace_metadata(cfg, bath, trace)));
  return trace;
}

Stability classify_point(const RunConfig& cfg, const DiscretizedBath& bath) {
  if (cfg.system.size() == 1) {
    const double lo = min_eigenvalue_single(cfg.system.omega0(), bath);
    double diag = cfg.system.omega0() * cfg.system.omega0();
    if (bath.modes() > 0) diag = std::max(diag, bath.omegas.array().square().maxCoeff());
    const double tol = 1e-6 * diag;
    if (lo < -tol) return Stability::Unstable;
    return std::abs(lo) <= tol ? Stability::Marginal : Stability::Stable;
  }
  return classify_stability(build_potential_matrix(cfg.system, bath), cfg.system, bath).classification;
}

std::string describe(const SpectralDensity& spec) {
  std::ostringstream os;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, OhmicFamily>)
          os << "ohmic s=" << format_double(s.s) << " eta=" << format_double(s.eta)
             << " omega_c=" << format_double(s.omega_c);
        else if constexpr (std::is_same_v<T, Lorentzian>)
          os << "lorentzian center=" << format_double(s.center) << " width=" << format_double(s.width)
             << " strength=" << format_double(s.strength);
        else
          os << "tabulated points=" << s.omega.size();
      },
      spec);
  return os.str();
}

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Warn: return "WARN";
    case CheckStatus::Fail: return "FAIL";
  }
  return "?";
}

// max over samples t <= horizon of |u - u_exact| and |anti - anti_exact|.
double oracle_error(const GreenTrace& trace, const ExactEvolution& exact, double horizon) {
  double err = 0.0;
  const Index a = exact.basis().a(0), ad = exact.basis().a_dag(0);
  for (std::size_t j = 0; j < trace.size(); ++j) {
    if (trace.times[j] > horizon + 1e-12) break;
    const Eigen::MatrixXcd rows = exact.system_rows(trace.times[j]);
    err = std::max({err, std::abs(trace.u_values[j] - rows(0, a)), std::abs(trace.anti_values[j] - rows(0, ad))});
  }
  return err;
}

CheckResult check_below(std::string name, double measured, double limit, std::string detail = {},
                        CheckStatus failure = CheckStatus::Fail) {
  CheckResult c{std::move(name), CheckStatus::Pass, measured, limit, std::move(detail)};
  if (!(measured <= limit)) c.status = failure;
  return c;
}

}  // namespace

PropagateResult run_propagate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const DiscretizedBath bath = cfg.bath();
  PropagateResult result;
  result.csv_path = cfg.output_dir / (cfg.name + ".csv");
  result.metadata_path = cfg.output_dir / (cfg.name + ".meta");
  result.trace = propagate_and_write(cfg, bath, result.csv_path, result.metadata_path);
  if (result.trace.coupling_warning)
    log << "warning: max |g_k| dt > 0.1; the second-order step may be inaccurate\n";
  if (result.trace.recurrence_time && cfg.propagation.t_max > *result.trace.recurrence_time)
    log << "warning: t_max exceeds the recurrence time " << format_double(*result.trace.recurrence_time)
        << "; discretization echo possible\n";
  if (result.trace.unstable) {
    log << "instability: propagator entries exceeded " << sci(kInstabilityThreshold) << " at t = "
        << format_double(*result.trace.abort_time) << "; partial trace written\n";
    result.exit_code = kExitInstability;
  }
  log << "wrote " << result.csv_path.string() << " (" << result.trace.size() << " samples)\n";
  return result;
}

StabilityOutcome run_stability(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const DiscretizedBath bath = cfg.bath();
  StabilityOutcome outcome;
  outcome.report = classify_stability(build_potential_matrix(cfg.system, bath), cfg.system, bath, cfg.spectral);
  const double omega0 = cfg.system.omega0();
  outcome.continuum = stability_integral(cfg.spectral, omega0, 0.0);
  outcome.eta_critical = outcome.report.eta_critical_estimate;

  std::ostringstream os;
  os << "spectral density: " << describe(cfg.spectral) << "\n";
  os << "system frequencies: " << cfg.system.size() << " (omega0 = " << format_double(omega0) << ")\n";
  os << "bath modes: " << bath.modes() << " on [" << format_double(cfg.grid.omega_min) << ", "
     << format_double(cfg.grid.omega_max) << "]\n";
  os << "min eigenvalue of V: " << format_double(outcome.report.min_eigenvalue()) << "\n";
  os << "max eigenvalue of V: " << format_double(outcome.report.eigenvalues[outcome.report.eigenvalues.size() - 1])
     << "\n";
  os << "classification: " << stability_name(outcome.report.classification)
     << " (tolerance " << sci(outcome.report.tolerance) << ")\n";
  os << "discrete criterion 4 sum g_k^2 / (omega0 omega_k): " << format_double(outcome.report.discrete_criterion)
     << "\n";
  if (outcome.continuum.divergent()) {
    os << "continuum stability integral: divergent as omega -> 0\n";
  } else {
    os << "continuum stability integral: " << format_double(*outcome.continuum.value) << " (error "
       << sci(outcome.continuum.abs_error) << ")\n";
  }
  if (outcome.eta_critical) {
    const auto& ohmic = std::get<OhmicFamily>(cfg.spectral);
    os << "critical coupling eta_M = omega0 / (4 omega_c Gamma(s)): " << format_double(*outcome.eta_critical)
       << "\n";
    if (ohmic.eta > *outcome.eta_critical)
      os << "note: eta = " << format_double(ohmic.eta) << " exceeds eta_M = " << format_double(*outcome.eta_critical)
         << "; the Hamiltonian is unbounded below in the continuum limit\n";
  }
  if (outcome.continuum.divergent()) {
    outcome.divergence_warning = true;
    os << "WARNING: the stability integral does not converge at small frequency; any non-zero coupling "
          "leads to an unphysical Hamiltonian in the continuum limit\n";
  }
  outcome.text = os.str();
  out << outcome.text;
  return outcome;
}

SweepOutcome run_sweep(const SweepConfig& cfg, std::size_t parallelism, std::ostream& log) {
  const std::size_t n = cfg.values.size();
  SweepOutcome outcome;
  outcome.points.resize(n);
  std::vector<std::string> messages(n);
  std::vector<int> codes(n, kExitOk);

  auto run_point = [&](std::size_t j) {
    SweepPoint& p = outcome.points[j];
    p.value = cfg.values[j];
    try {
      RunConfig point = cfg.point(j);
      point.name = cfg.base.name + "_" + cfg.axis + "_" + cfg.values[j];
      point.output_dir = cfg.base.output_dir;
      const DiscretizedBath bath = point.bath();
      p.classification = stability_name(classify_point(point, bath));
      p.csv_path = point.output_dir / (point.name + ".csv");
      const GreenTrace trace = propagate_and_write(point, bath, p.csv_path, point.output_dir / (point.name + ".meta"));
      p.unstable = trace.unstable;
      for (const auto& u : trace.u_values) p.sup_abs_u = std::max(p.sup_abs_u, std::abs(u));
      if (!trace.defects.empty()) p.final_defect = trace.defects.back();
      if (trace.size() >= 3) p.onset = oscillation_onset(trace);
      if (trace.unstable) p.status = "unstable abort at t=" + format_double(*trace.abort_time);
    } catch (const ConfigError& e) {
      p.status = std::string("error: ") + e.what();
      codes[j] = kExitConfig;
    } catch (const IoError& e) {
      p.status = std::string("error: ") + e.what();
      codes[j] = kExitIo;
    } catch (const std::exception& e) {
      p.status = std::string("error: ") + e.what();
      codes[j] = kExitValidation;
    }
    messages[j] = cfg.axis + " = " + p.value + ": " + p.status + "\n";
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, n));
  if (workers == 1) {
    for (std::size_t j = 0; j < n; ++j) run_point(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < n; j = next++) run_point(j);
      });
    for (auto& t : pool) t.join();
  }

  std::string summary = "value,status,classification,onset_time,sup_abs_u,final_defect\n";
  for (const auto& p : outcome.points) {
    std::string status = p.status;
    for (char& c : status)
      if (c == ',' || c == '\n') c = ';';
    summary += p.value + "," + status + "," + p.classification + "," + (p.onset ? format_double(*p.onset) : "none") +
               "," + format_double(p.sup_abs_u) + "," + (p.final_defect ? format_double(*p.final_defect) : "none") +
               "\n";
  }
  outcome.summary_path = cfg.base.output_dir / (cfg.base.name + "_summary.csv");
  write_file(outcome.summary_path, summary);
  for (const auto& m : messages) log << m;
  log << "wrote " << outcome.summary_path.string() << "\n";
  for (int c : codes)
    if (c != kExitOk) {
      outcome.exit_code = c;
      break;
    }
  return outcome;
}

ValidationOutcome run_validate(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  const DiscretizedBath bath = cfg.bath();
  if (cfg.system.size() + bath.modes() > kMaxValidateModes)
    throw ConfigError("validate: at most " + std::to_string(kMaxValidateModes) + " modes are supported");
  ValidationOutcome outcome;
  auto& checks = outcome.checks;
  const CouplingMode mode = cfg.propagation.mode;
  const double dt = cfg.propagation.dt;

  const ExactEvolution exact(cfg.system, bath, mode);
  const bool unstable = mode == CouplingMode::FullCoupling &&
                        classify_stability(build_potential_matrix(cfg.system, bath), cfg.system, bath)
                                .classification == Stability::Unstable;
  const double horizon = unstable ? std::min(cfg.propagation.t_max, 10.0) : cfg.propagation.t_max;

  // Stepped propagator against the exact evolution.
  PropagationConfig pc = cfg.propagation;
  const GreenTrace trace = compose(cfg.system, bath, pc);
  checks.push_back(check_below("oracle_u_error", oracle_error(trace, exact, horizon), 1e-4,
                               "max |u_step - u_exact| for t <= " + format_double(horizon)));

  // Exact evolution is canonical.
  double oracle_defect = 0.0;
  for (double t : {0.5 * horizon, horizon}) oracle_defect = std::max(oracle_defect, row_defect(exact.system_rows(t), exact.basis()));
  checks.push_back(check_below("oracle_defect", oracle_defect, 1e-10, "row defect of the exact propagator"));

  // Accumulated defect of the stepped propagator.
  if (!trace.defects.empty())
    checks.push_back(check_below("step_defect", trace.defects.back(), 1e-5,
                                 "defect at t = " + format_double(trace.times.back()),
                                 unstable ? CheckStatus::Warn : CheckStatus::Fail));

  // Closed-form kernels against the divided-difference assembly.
  {
    const BogoliubovMatrix closed = step_coefficients(cfg.system, bath, dt, mode);
    const BogoliubovMatrix dd = step_coefficients_divided_difference(cfg.system, bath, dt, mode);
    checks.push_back(check_below("closed_form_vs_divided_difference", (closed.entries - dd.entries).cwiseAbs().maxCoeff(),
                                 1e-9, "max entry difference of the step matrices"));
    if (mode == CouplingMode::RWA) {
      const Index N = closed.basis.modes();
      const double anti = closed.entries.topRightCorner(N, N).cwiseAbs().maxCoeff();
      checks.push_back(check_below("rwa_anti_blocks", anti, 0.0, "max |anti-rotating entry|"));
      double sup = 0.0;
      for (const auto& u : trace.u_values) sup = std::max(sup, std::abs(u));
      checks.push_back(check_below("rwa_number_bound", sup - 1.0, 1e-6, "sup |u| - 1"));
    }
  }

  // Second-order step against the order-tagged Taylor series.
  {
    const double t = std::min(dt, 0.1);
    const BogoliubovMatrix step = step_coefficients_full(cfg.system, bath, t);
    std::optional<double> err;
    for (int order = 20; order <= 400 && !err; order += 20) {
      try {
        const auto rows = taylor_evaluate_orders(taylor_coefficients(cfg.system, bath, order, 0, 2), t);
        err = (step.entries.row(0).transpose() - (rows[0] + rows[1] + rows[2])).cwiseAbs().maxCoeff();
      } catch (const TruncationError&) {
      }
    }
    if (err)
      checks.push_back(check_below("step_vs_taylor_g2", *err, 1e-10, "t = " + format_double(t)));
    else
      checks.push_back({"step_vs_taylor_g2", CheckStatus::Warn, 0.0, 1e-10, "Taylor series did not converge"});
  }

  // Chain sums against order-tagged Taylor on a 6-mode version of the bath.
  {
    GridConfig small = cfg.grid;
    small.n_modes = std::min<std::size_t>(6, cfg.grid.n_modes);
    DiscretizedBath coarse = discretize(cfg.spectral, small);
    if (cfg.system.size() > 1) coarse = coarse.replicated(cfg.system.size());
    const double t = std::min(1.0, 10.0 / std::max(cfg.grid.omega_max, cfg.system.omegas.maxCoeff()));
    try {
      const TaylorCoefficients tc = taylor_coefficients(cfg.system, coarse, 200, 0, 6);
      const auto rows = taylor_evaluate_orders(tc, t);
      double err = 0.0;
      Eigen::VectorXcd chain = Eigen::VectorXcd::Zero(rows[0].size());
      Eigen::VectorXcd taylor = rows[0];
      for (int n = 1; n <= 3; ++n) {
        const ChainTerm term = chain_term(cfg.system, coarse, n, t);
        chain += (term.odd.row(0) + term.even.row(0)).transpose();
        taylor += rows[static_cast<std::size_t>(2 * n - 1)] + rows[static_cast<std::size_t>(2 * n)];
        err = std::max(err, (rows[0] + chain - taylor).cwiseAbs().maxCoeff());
      }
      checks.push_back(check_below("chain_vs_taylor", err, 1e-8,
                                   "n <= 3, " + std::to_string(coarse.modes()) + " modes, t = " + format_double(t)));
    } catch (const DegenerateSpectrumError& e) {
      checks.push_back({"chain_vs_taylor", CheckStatus::Warn, 0.0, 1e-8, std::string("skipped: ") + e.what()});
    } catch (const TruncationError& e) {
      checks.push_back({"chain_vs_taylor", CheckStatus::Warn, e.achieved_bound(), 1e-8, "Taylor series did not converge"});
    }
  }

  // Time-step convergence order over a common window.
  {
    double window = std::min(horizon, 50.0);
    window = std::floor(window / (2.0 * dt) + 1e-9) * 2.0 * dt;
    if (window < 2.0 * dt) {
      checks.push_back({"dt_convergence_order", CheckStatus::Warn, 0.0, 1.8, "window shorter than 2 dt"});
    } else {
      PropagationConfig fine = cfg.propagation, coarse = cfg.propagation;
      fine.t_max = coarse.t_max = window;
      fine.record_stride = 2;
      coarse.dt = 2.0 * dt;
      coarse.record_stride = 1;
      const double e_fine = oracle_error(compose(cfg.system, bath, fine), exact, window);
      const double e_coarse = oracle_error(compose(cfg.system, bath, coarse), exact, window);
      const std::string detail = "error " + sci(e_coarse) + " at dt = " + format_double(2.0 * dt) + ", " +
                                 sci(e_fine) + " at dt = " + format_double(dt);
      if (e_fine <= 1e-12) {
        checks.push_back({"dt_convergence_order", CheckStatus::Pass, 0.0, 1.8, detail + " (rounding level)"});
      } else {
        const double order = std::log2(e_coarse / e_fine);
        CheckResult c{"dt_convergence_order", CheckStatus::Pass, order, 1.8, detail};
        if (!(order >= 1.8)) c.status = CheckStatus::Warn;
        checks.push_back(c);
      }
    }
  }

  for (const auto& c : checks) {
    out << status_name(c.status) << "  " << c.name << "  measured " << sci(c.measured) << "  limit " << sci(c.limit);
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
    if (c.status == CheckStatus::Fail) outcome.exit_code = kExitValidation;
  }
  out << (outcome.exit_code == kExitOk ? "validation passed\n" : "validation FAILED\n");
  return outcome;
}

}  // namespace openqosc
