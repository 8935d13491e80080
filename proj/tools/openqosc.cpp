#include "openqosc/config.hpp"
#include "openqosc/errors.hpp"
#include "openqosc/presets.hpp"
#include "openqosc/workflows.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace openqosc;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::vector<std::string> sets;
  std::size_t parallelism = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Configuration file (key = value lines) or preset name");
  cmd->add_option("--preset", o.preset, "Shipped preset: fig1-lorentzian, fig2a, fig2b, fig2c, fig3, fig4");
  cmd->add_option("--out", o.out, "Output directory (overrides output.dir)");
  cmd->add_option("--set", o.sets, "Override a key: --set key=value (repeatable)");
  cmd->add_flag("--quiet", o.quiet, "Suppress progress messages");
  cmd->allow_extras();
}

// Remaining arguments of the form --key value or --key=value.
void apply_extras(KeyValues& kv, const std::vector<std::string>& extras) {
  for (std::size_t j = 0; j < extras.size(); ++j) {
    const std::string& arg = extras[j];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      apply_assignment(kv, body);
    } else {
      if (j + 1 >= extras.size()) throw ConfigError("missing value for --" + body);
      kv[body] = extras[++j];
    }
  }
}

KeyValues load(const Options& o, const CLI::App* cmd) {
  KeyValues kv;
  if (!o.preset.empty() && !o.config.empty()) throw ConfigError("--config and --preset are mutually exclusive");
  if (!o.preset.empty()) {
    kv = preset_values(o.preset);
  } else if (!o.config.empty()) {
    if (!std::filesystem::exists(o.config)) {
      const auto names = preset_names();
      if (std::find(names.begin(), names.end(), o.config) == names.end())
        throw IoError("configuration file not found: " + o.config);
      kv = preset_values(o.config);
    } else {
      kv = read_key_values(o.config);
    }
  }
  for (const auto& s : o.sets) apply_assignment(kv, s);
  apply_extras(kv, cmd->remaining());
  if (!o.out.empty()) kv["output.dir"] = o.out;
  return kv;
}

std::size_t resolve_parallelism(const Options& o, const SweepConfig& sweep) {
  if (o.parallelism > 0) return o.parallelism;
  if (const char* env = std::getenv("OPENQOSC_THREADS")) {
    std::istringstream in(env);
    std::size_t n = 0;
    if (in >> n && n > 0) return n;
    throw ConfigError("OPENQOSC_THREADS must be a positive integer");
  }
  return sweep.parallelism;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heisenberg-picture propagation of damped harmonic oscillators coupled to bosonic baths"};
  app.require_subcommand(1);
  Options o;
  auto* propagate = app.add_subcommand("propagate", "Write the u(t) trace of a run as CSV");
  auto* stability = app.add_subcommand("stability", "Report the stability of the discretized Hamiltonian");
  auto* sweep = app.add_subcommand("sweep", "Run one trace per value of sweep.axis");
  auto* validate = app.add_subcommand("validate", "Cross-check the propagator against exact references");
  for (auto* cmd : {propagate, stability, sweep, validate}) add_common(cmd, o);
  sweep->add_option("--parallelism", o.parallelism, "Concurrent sweep points")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  std::ostringstream sink;
  std::ostream& log = o.quiet ? static_cast<std::ostream&>(sink) : std::cerr;
  try {
    if (propagate->parsed()) {
      const RunConfig cfg = run_config_from(load(o, propagate));
      return run_propagate(cfg, log).exit_code;
    }
    if (stability->parsed()) {
      const RunConfig cfg = run_config_from(load(o, stability));
      const StabilityOutcome outcome = run_stability(cfg, std::cout);
      if (outcome.divergence_warning) std::cerr << "warning: stability integral diverges at small frequency\n";
      return kExitOk;
    }
    if (sweep->parsed()) {
      const SweepConfig cfg = sweep_config_from(load(o, sweep));
      return run_sweep(cfg, resolve_parallelism(o, cfg), log).exit_code;
    }
    if (validate->parsed()) {
      const RunConfig cfg = run_config_from(load(o, validate));
      return run_validate(cfg, std::cout).exit_code;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
