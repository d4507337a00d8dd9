// stovamp run <config> [--key value ...]
// stovamp sweep <config> --seeds a..b [--threads n] [--key value ...]

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"

#include "config.hpp"
#include "experiment.hpp"

using namespace stovamp;
using namespace stovamp::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string> &extra) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const std::string &a = extra[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) {
      throw ConfigError("unexpected argument '" + a + "'");
    }
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else if (i + 1 < extra.size()) {
      out.emplace_back(a.substr(2), extra[++i]);
    } else {
      throw ConfigError("option '" + a + "' needs a value");
    }
  }
  return out;
}

ExperimentConfig load(const std::string &path, const std::vector<std::string> &extra) {
  ExperimentConfig cfg =
      std::filesystem::path(path).extension() == ".csv" ? config_from_trace(path) : load_config(path);
  apply_overrides(cfg, parse_overrides(extra));
  cfg.validate();
  return cfg;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string &s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots)), b = std::stoull(s.substr(dots + 2));
    if (b < a) {
      throw ConfigError("--seeds: empty range '" + s + "'");
    }
    return {a, b};
  } catch (const std::logic_error &) {
    throw ConfigError("--seeds: expected a..b, got '" + s + "'");
  }
}

void report(const ExperimentConfig &cfg, const Outcome &o) {
  std::cout << "seed " << cfg.seed << ": final NMSE " << o.final_nmse_db << " dB after " << o.run.iterations_run
            << " iterations, " << o.wall_seconds << " s";
  if (!o.instance.cdp.empty()) {
    std::cout << ", " << double(o.fft_count) / o.run.iterations_run << " FFTs/iteration";
  }
  std::cout << "\n  trace: " << o.trace_path << "\n";
}

int cmd_run(const std::string &path, const std::vector<std::string> &extra) {
  const ExperimentConfig cfg = load(path, extra);
  report(cfg, run_experiment(cfg));
  return 0;
}

int cmd_sweep(const std::string &path, const std::string &seeds, int threads, double threshold,
              const std::vector<std::string> &extra) {
  const ExperimentConfig base = load(path, extra);
  const auto [first, last] = parse_seed_range(seeds);
  std::vector<std::uint64_t> all;
  for (auto s = first; s <= last; ++s) {
    all.push_back(s);
  }
  struct Row {
    double final_db = 0;
    int reached = -1;
    std::string error;
  };
  std::vector<Row> rows(all.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < all.size(); i = next++) {
      ExperimentConfig cfg = base;
      cfg.seed = all[i];
      cfg.output_dir = (std::filesystem::path(base.output_dir) / ("seed_" + std::to_string(cfg.seed))).string();
      try {
        const Outcome o = run_experiment(cfg);
        rows[i].final_db = o.final_nmse_db;
        for (const auto &r : o.run.trace) {
          if (r.nmse_db && *r.nmse_db <= threshold) {
            rows[i].reached = r.iteration + 1;
            break;
          }
        }
        std::lock_guard<std::mutex> lock(io);
        report(cfg, o);
      } catch (const std::exception &e) {
        rows[i].error = e.what();
        std::lock_guard<std::mutex> lock(io);
        std::cerr << "seed " << cfg.seed << ": " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, threads); ++t) {
    pool.emplace_back(worker);
  }
  for (auto &t : pool) {
    t.join();
  }

  std::filesystem::create_directories(base.output_dir);
  std::ofstream csv(std::filesystem::path(base.output_dir) / "sweep.csv");
  csv << "seed,final_nmse_db,iterations_to_threshold\n";
  bool failed = false;
  for (std::size_t i = 0; i < all.size(); ++i) {
    csv << all[i] << ',' << (rows[i].error.empty() ? format_double(rows[i].final_db) : "") << ','
        << rows[i].reached << '\n';
    failed = failed || !rows[i].error.empty();
  }
  return failed ? kExitNumeric : 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"VAMP and stochastic VAMP phase-retrieval experiments"};
  app.require_subcommand(1);

  std::string run_cfg;
  auto *run = app.add_subcommand("run", "run one experiment");
  run->add_option("config", run_cfg, "config file, or a trace.csv to re-run from its header")->required();
  run->allow_extras();

  std::string sweep_cfg, seeds;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  double threshold = -25.0;
  auto *sweep = app.add_subcommand("sweep", "run one experiment per seed, one directory each");
  sweep->add_option("config", sweep_cfg, "config file")->required();
  sweep->add_option("--seeds", seeds, "seed range a..b")->required();
  sweep->add_option("--threads", threads, "worker threads");
  sweep->add_option("--threshold", threshold, "NMSE level [dB] for iterations_to_threshold in sweep.csv");
  sweep->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      return cmd_run(run_cfg, run->remaining());
    }
    return cmd_sweep(sweep_cfg, seeds, threads, threshold, sweep->remaining());
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError &e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError &e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
