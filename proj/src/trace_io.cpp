#include "trace_io.hpp"

#include <fstream>
#include <sstream>

#include <stovamp/errors.hpp>

#include "config.hpp"

namespace stovamp::cli {

void write_trace(const std::vector<TraceRecord> &records, const std::vector<std::string> &comments,
                 const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write trace '" + path + "'");
  }
  for (const auto &c : comments) {
    out << '#' << c << '\n';
  }
  out << kTraceHeader << '\n';
  for (const auto &r : records) {
    out << r.iteration << ',' << r.block << ',' << (r.nmse_db ? format_double(*r.nmse_db) : "") << ','
        << format_double(r.eta1) << ',' << format_double(r.gamma1) << ',' << format_double(r.tau1) << ','
        << format_double(r.wall_ms) << '\n';
  }
  out.flush();
  if (!out) {
    throw FormatError("write failed for trace '" + path + "'");
  }
}

TraceFile read_trace(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open trace '" + path + "'");
  }
  TraceFile t;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!header) {
      if (!line.empty() && line[0] == '#') {
        t.comments.push_back(line.substr(1));
        continue;
      }
      if (line != kTraceHeader) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": missing trace header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
      f.emplace_back();
    }
    if (f.size() != 7) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 7 fields");
    }
    try {
      TraceRecord r;
      r.iteration = std::stoi(f[0]);
      r.block = std::stoi(f[1]);
      if (!f[2].empty()) {
        r.nmse_db = std::stod(f[2]);
      }
      r.eta1 = std::stod(f[3]);
      r.gamma1 = std::stod(f[4]);
      r.tau1 = std::stod(f[5]);
      r.wall_ms = std::stod(f[6]);
      t.records.push_back(r);
    } catch (const std::exception &) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  if (!header) {
    throw FormatError(path + ": missing trace header");
  }
  return t;
}

} // namespace stovamp::cli
