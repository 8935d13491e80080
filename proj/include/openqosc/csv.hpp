#pragma once

#include "openqosc/config.hpp"
#include "openqosc/propagator.hpp"

#include <filesystem>
#include <string>

namespace openqosc {

inline constexpr const char* kTraceHeader = "t,re_u,im_u,abs_u,re_anti,im_anti,defect";

/// Trace as CSV text, shortest round-trip numbers, LF line endings.
std::string trace_csv(const GreenTrace& trace);

/// Writes `content` verbatim (binary mode); throws IoError.
void write_file(const std::filesystem::path& path, const std::string& content);

/// Key-value sidecar: the run's configuration plus measured quantities.
KeyValues trace_metadata(const RunConfig& cfg, const DiscretizedBath& bath, const GreenTrace& trace);

}  // namespace openqosc
