#pragma once

#include <memory>
#include <string>
#include <vector>

#include <stovamp/solver.hpp>

#include "config.hpp"

namespace stovamp::cli {

/// A synthesized problem instance: ground truth, operators, observations.
struct Instance {
  Problem<double> problem;
  ComplexVector<double> x_true;
  double noise_precision = 0;
  int rows_per_block = 0;
  int height = 0;
  int width = 0;
  std::string image_hash;
  std::vector<std::shared_ptr<CodedDiffractionOperator<double>>> cdp;

  /// Lines for the `# [derived]` part of the trace header.
  std::vector<std::string> derived() const;
};

/// Build the instance described by `config`. Signal, operators, noise and
/// solver initialization draw from separate substreams of `config.seed`, so
/// the two solvers see the same instance for a given seed.
Instance synthesize(const ExperimentConfig &config);

SolverConfig<double> solver_config(const ExperimentConfig &config);

struct Outcome {
  Outcome(Instance inst, RunResult<double> result) : instance(std::move(inst)), run(std::move(result)) {}

  Instance instance;
  RunResult<double> run;
  double final_nmse_db = 0;
  double wall_seconds = 0;
  std::uint64_t fft_count = 0;  // solver-phase FFTs, CDP only
  std::string trace_path;
};

/// Run the selected solver on a synthesized instance.
Outcome solve(const ExperimentConfig &config, const StepObserver<double> &observer = {});

/// solve() plus artifacts in config.output_dir: trace.csv, summary.txt,
/// plot_trace.py and, for image experiments, reconstruction.pgm.
Outcome run_experiment(const ExperimentConfig &config, const StepObserver<double> &observer = {});

std::vector<std::string> trace_comments(const ExperimentConfig &config, const Instance &instance);

/// Phase-aligned real part of the estimate, clamped to [0, 1].
RealVector<double> reconstruction_image(const ComplexVector<double> &x_true, const ComplexVector<double> &x_hat);

} // namespace stovamp::cli
