#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace stovamp::cli {

/// Flat experiment description. Every field has a `key = value` spelling.
struct ExperimentConfig {
  std::string experiment = "haar";  // haar | cdp | custom
  int n = 512;                      // signal length (haar)
  int height = 256;                 // image size (cdp, custom)
  int width = 256;
  int blocks = 2;
  double alpha = 2.4;  // total measurements / N (haar)
  double snr_db = 30;
  double rho = 0.97;
  int iterations = 200;
  std::string schedule = "sequential";  // sequential | parallel
  std::string block_order = "fixed";    // fixed | random
  double early_stop = 0;
  double init_tau_scale = 0.01;
  double prior_variance = 1;
  std::uint64_t seed = 0;
  std::string solver = "stochastic";  // stochastic | vamp
  std::string image;                  // PGM path (cdp)
  std::string output_dir = "out";
  bool record_wall_time = false;

  /// Canonical (key, value) pairs in a fixed order; parse(to_pairs()) is lossless.
  std::vector<std::pair<std::string, std::string>> to_pairs() const;
  void set(const std::string &key, const std::string &value);
  void validate() const;

  /// Rows per Haar block, round(alpha * n / blocks).
  int haar_rows() const;
  int signal_dim() const;
};

ExperimentConfig parse_config_text(const std::string &text, const std::string &origin);
ExperimentConfig load_config(const std::string &path);

/// Recover the configuration echoed at the top of a trace file.
ExperimentConfig config_from_trace(const std::string &path);

/// Apply `--key value` overrides.
void apply_overrides(ExperimentConfig &config, const std::vector<std::pair<std::string, std::string>> &overrides);

std::string format_double(double v);

} // namespace stovamp::cli
