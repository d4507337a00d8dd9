#pragma once

#include <string>
#include <vector>

#include <stovamp/metrics.hpp>

namespace stovamp::cli {

inline constexpr const char *kTraceHeader = "iter,block,nmse_db,eta1,gamma1,tau1,wall_ms";

/// CSV with `#`-prefixed comment lines, then the header and one row per
/// record. Floats use 17 significant digits so a read reproduces them exactly.
void write_trace(const std::vector<TraceRecord> &records, const std::vector<std::string> &comments,
                 const std::string &path);

struct TraceFile {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<TraceRecord> records;
};

TraceFile read_trace(const std::string &path);

} // namespace stovamp::cli
