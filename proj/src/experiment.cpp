#include "experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "pgm.hpp"
#include "trace_io.hpp"

namespace stovamp::cli {

namespace {

constexpr const char *kPlotScript = R"(#!/usr/bin/env python3
# NMSE [dB] against iteration for one or more trace.csv files.
import csv, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

paths = sys.argv[1:] or ["trace.csv"]
for path in paths:
    rows = [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))][1:]
    blocks = max(int(r[1]) for r in rows) if rows else 1
    xs = [int(r[0]) + int(r[1]) / blocks for r in rows if r[2]]
    ys = [float(r[2]) for r in rows if r[2]]
    plt.plot(xs, ys, label=path)
plt.xlabel("iteration")
plt.ylabel("NMSE [dB]")
plt.grid(True, alpha=0.3)
plt.legend()
plt.savefig("nmse.png", dpi=150)
print("wrote nmse.png")
)";

} // namespace

std::vector<std::string> Instance::derived() const {
  const Eigen::Index n = x_true.size();
  Eigen::Index m = 0;
  for (const auto &y : problem.observations) {
    m += y.size();
  }
  std::vector<std::string> out{
      " [derived] signal_dim = " + std::to_string(n),
      " [derived] rows_per_block = " + std::to_string(rows_per_block),
      " [derived] alpha_effective = " + format_double(double(m) / double(n)),
      " [derived] noise_precision = " + format_double(noise_precision),
      " [derived] snr_reference = realized mean |z|^2 over all blocks",
  };
  if (!image_hash.empty()) {
    out.push_back(" [derived] image_fnv1a64 = " + image_hash);
  }
  return out;
}

Instance synthesize(const ExperimentConfig &config) {
  config.validate();
  RngHandle master(config.seed);
  RngHandle signal_rng = master.substream(1);
  RngHandle operator_rng = master.substream(2);
  RngHandle noise_rng = master.substream(3);

  Instance inst;
  const double scale = std::sqrt(config.prior_variance);
  if (config.experiment == "haar") {
    inst.x_true = scale * sample_standard_complex_gaussian(config.n, signal_rng);
    inst.rows_per_block = config.haar_rows();
    for (int l = 0; l < config.blocks; ++l) {
      inst.problem.operators.push_back(
          std::make_shared<HaarOperator<double>>(sample_haar_columns(inst.rows_per_block, config.n, operator_rng)));
    }
  } else {
    if (config.experiment == "cdp") {
      Image img = load_pgm(config.image);
      inst.height = img.height;
      inst.width = img.width;
      inst.x_true = std::move(img.pixels);
      inst.image_hash = file_hash(config.image);
    } else {
      inst.height = config.height;
      inst.width = config.width;
      inst.x_true = scale * sample_standard_complex_gaussian(Eigen::Index(config.height) * config.width, signal_rng);
    }
    inst.rows_per_block = inst.height * inst.width;
    inst.cdp = sample_cdp_operators(inst.height, inst.width, config.blocks, operator_rng);
    for (const auto &op : inst.cdp) {
      inst.problem.operators.push_back(op);
    }
  }

  std::vector<ComplexVector<double>> z;
  for (const auto &op : inst.problem.operators) {
    z.push_back(op->apply(inst.x_true));
  }
  inst.noise_precision = snr_to_noise_precision(config.snr_db, z);
  const RicianChannel<double> channel(inst.noise_precision);
  for (const auto &zl : z) {
    inst.problem.observations.push_back(generate_observation(channel, zl, noise_rng));
  }
  return inst;
}

SolverConfig<double> solver_config(const ExperimentConfig &config) {
  SolverConfig<double> s;
  s.iterations = config.iterations;
  s.damping = config.rho;
  s.schedule = config.schedule == "parallel" ? Schedule::Parallel : Schedule::Sequential;
  s.block_order = config.block_order == "random" ? BlockOrder::RandomPermutation : BlockOrder::Fixed;
  s.early_stop = config.early_stop;
  s.init_tau_scale = config.init_tau_scale;
  s.record_wall_time = config.record_wall_time;
  return s;
}

Outcome solve(const ExperimentConfig &config, const StepObserver<double> &observer) {
  Instance inst = synthesize(config);
  const GaussianPrior<double> prior(config.prior_variance);
  const RicianChannel<double> channel(inst.noise_precision);
  RngHandle solver_rng = RngHandle(config.seed).substream(4);
  RunOptions<double> options;
  options.x_true = inst.x_true;
  options.observer = observer;

  for (const auto &op : inst.cdp) {
    op->reset_fft_count();
  }
  const auto start = std::chrono::steady_clock::now();
  RunResult<double> run =
      config.solver == "vamp"
          ? vamp_run(inst.problem, prior, channel, solver_config(config), solver_rng, options)
          : stochastic_vamp_run(inst.problem, prior, channel, solver_config(config), solver_rng, options);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Outcome out(std::move(inst), std::move(run));
  out.wall_seconds = wall;
  for (const auto &op : out.instance.cdp) {
    out.fft_count += op->fft_count();
  }
  out.final_nmse_db = nmse_db(out.instance.x_true, out.run.x_hat);
  return out;
}

std::vector<std::string> trace_comments(const ExperimentConfig &config, const Instance &instance) {
  std::vector<std::string> c;
  for (const auto &[k, v] : config.to_pairs()) {
    c.push_back(" " + k + " = " + v);
  }
  for (auto &d : instance.derived()) {
    c.push_back(std::move(d));
  }
  return c;
}

RealVector<double> reconstruction_image(const ComplexVector<double> &x_true, const ComplexVector<double> &x_hat) {
  return align_phase(x_true, x_hat).real().cwiseMax(0.0).cwiseMin(1.0);
}

Outcome run_experiment(const ExperimentConfig &config, const StepObserver<double> &observer) {
  config.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory '" + config.output_dir + "': " + ec.message());
  }
  Outcome out = solve(config, observer);
  const fs::path dir(config.output_dir);
  out.trace_path = (dir / "trace.csv").string();
  write_trace(out.run.trace, trace_comments(config, out.instance), out.trace_path);

  {
    std::ofstream plot(dir / "plot_trace.py");
    plot << kPlotScript;
  }
  if (!out.instance.cdp.empty()) {
    write_pgm((dir / "reconstruction.pgm").string(), out.instance.height, out.instance.width,
              reconstruction_image(out.instance.x_true, out.run.x_hat));
  }
  std::ofstream summary(dir / "summary.txt");
  summary << "solver = " << config.solver << "\n"
          << "iterations_run = " << out.run.iterations_run << "\n"
          << "final_nmse_db = " << format_double(out.final_nmse_db) << "\n"
          << "wall_seconds = " << format_double(out.wall_seconds) << "\n";
  if (!out.instance.cdp.empty()) {
    summary << "fft_count = " << out.fft_count << "\n"
            << "fft_per_iteration = " << format_double(double(out.fft_count) / out.run.iterations_run) << "\n";
  }
  if (!summary) {
    throw FormatError("cannot write summary in '" + config.output_dir + "'");
  }
  return out;
}

} // namespace stovamp::cli
