#pragma once

#include "openqosc/config.hpp"
#include "openqosc/oracle.hpp"
#include "openqosc/propagator.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace openqosc {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInstability = 3,
  kExitValidation = 4,
  kExitIo = 5,
};

struct PropagateResult {
  GreenTrace trace;
  std::filesystem::path csv_path;
  std::filesystem::path metadata_path;
  int exit_code = kExitOk;
};

/// Writes <output_dir>/<name>.csv and <name>.meta. An instability abort keeps
/// the partial CSV and returns kExitInstability.
PropagateResult run_propagate(const RunConfig& cfg, std::ostream& log);

struct StabilityOutcome {
  StabilityReport report;
  StabilityIntegral continuum;
  std::optional<double> eta_critical;
  bool divergence_warning = false;
  std::string text;
};

/// Prints the stability report to `out`.
StabilityOutcome run_stability(const RunConfig& cfg, std::ostream& out);

struct SweepPoint {
  std::string value;
  std::string status = "ok";
  std::string classification;
  std::optional<double> onset;
  double sup_abs_u = 0.0;
  std::optional<double> final_defect;
  bool unstable = false;
  std::filesystem::path csv_path;
};

struct SweepOutcome {
  std::vector<SweepPoint> points;
  std::filesystem::path summary_path;
  int exit_code = kExitOk;
};

/// One trace CSV and sidecar per axis value, plus <name>_summary.csv. Points
/// run on up to `parallelism` threads and produce identical files for any
/// thread count.
SweepOutcome run_sweep(const SweepConfig& cfg, std::size_t parallelism, std::ostream& log);

enum class CheckStatus { Pass, Warn, Fail };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double measured = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct ValidationOutcome {
  std::vector<CheckResult> checks;
  int exit_code = kExitOk;
};

/// Cross-checks the stepped propagator against the oracle, the Taylor series
/// and the chain sums; any failed check gives kExitValidation.
ValidationOutcome run_validate(const RunConfig& cfg, std::ostream& out);

/// Largest system+bath size accepted by run_validate.
inline constexpr Index kMaxValidateModes = 4096;

}  // namespace openqosc
