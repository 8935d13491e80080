#include "openqosc/csv.hpp"

#include "openqosc/errors.hpp"

#include <fstream>

namespace openqosc {

std::string trace_csv(const GreenTrace& trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (std::size_t j = 0; j < trace.size(); ++j) {
    const Complex u = trace.u_values[j];
    const Complex anti = trace.anti_values[j];
    const double fields[] = {trace.times[j], u.real(), u.imag(), std::abs(u), anti.real(), anti.imag(),
                             trace.defects[j]};
    for (std::size_t f = 0; f < std::size(fields); ++f) {
      if (f) out += ',';
      out += format_double(fields[f]);
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

KeyValues trace_metadata(const RunConfig& cfg, const DiscretizedBath& bath, const GreenTrace& trace) {
  KeyValues kv = to_key_values(cfg);
  kv["result.spectral_name"] = family_name(cfg.spectral);
  kv["result.modes"] = std::to_string(bath.modes());
  kv["result.samples"] = std::to_string(trace.size());
  kv["result.unstable"] = trace.unstable ? "true" : "false";
  kv["result.abort_time"] = trace.abort_time ? format_double(*trace.abort_time) : "none";
  kv["result.coupling_warning"] = trace.coupling_warning ? "true" : "false";
  kv["result.dt_auto"] = cfg.auto_dt ? "true" : "false";
  if (trace.recurrence_time) {
    kv["result.recurrence_time"] = format_double(*trace.recurrence_time);
    const bool echo = !trace.times.empty() && trace.times.back() > *trace.recurrence_time;
    kv["result.recurrence_guard"] = echo ? "discretization echo possible" : "ok";
  } else {
    kv["result.recurrence_time"] = "none";
  }
  double sup = 0.0;
  for (const auto& u : trace.u_values) sup = std::max(sup, std::abs(u));
  kv["result.sup_abs_u"] = format_double(sup);
  kv["result.final_defect"] = trace.defects.empty() ? "none" : format_double(trace.defects.back());
  if (trace.size() >= 3) {
    const auto onset = oscillation_onset(trace);
    kv["result.onset_time"] = onset ? format_double(*onset) : "none";
  }
  return kv;
}

}  // namespace openqosc
