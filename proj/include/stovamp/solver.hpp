#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "denoisers.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "sensing.hpp"

namespace stovamp {

enum class Schedule { Sequential, Parallel };
enum class BlockOrder { Fixed, RandomPermutation };

template <typename Real>
struct SolverConfig {
  int iterations = 100;
  Real damping = 1;
  Schedule schedule = Schedule::Sequential;
  BlockOrder block_order = BlockOrder::Fixed;
  // Stop after an epoch once ||x1 - x1_prev|| / ||x1_prev|| < early_stop; 0 disables.
  Real early_stop = 0;
  // Initial output-side precision is init_tau_scale / mean(y^2).
  Real init_tau_scale = Real(0.01);
  bool record_wall_time = true;

  void validate() const {
    if (iterations < 1) {
      throw ConfigError("iterations must be >= 1");
    }
    if (!(damping > Real(0) && damping <= Real(1))) {
      throw ConfigError("damping must lie in (0, 1]");
    }
    if (!(early_stop >= Real(0))) {
      throw ConfigError("early_stop must be >= 0");
    }
    if (!(init_tau_scale > Real(0))) {
      throw ConfigError("init_tau_scale must be positive");
    }
  }
};

/// Sensing blocks A^(l) and their magnitude observations y^(l).
template <typename Real>
struct Problem {
  std::vector<OperatorPtr<Real>> operators;
  std::vector<Magnitudes<Real>> observations;

  std::size_t blocks() const { return operators.size(); }
  Eigen::Index signal_dim() const { return operators.front()->input_dim(); }

  void validate() const {
    if (operators.empty()) {
      throw DimensionError("problem has no sensing blocks");
    }
    if (observations.size() != operators.size()) {
      throw DimensionError("problem: " + std::to_string(operators.size()) + " operators but " +
                           std::to_string(observations.size()) + " observation blocks");
    }
    for (std::size_t l = 0; l < operators.size(); ++l) {
      const auto &op = *operators[l];
      if (op.input_dim() != signal_dim()) {
        throw DimensionError("block " + std::to_string(l + 1) + " has a different input dimension");
      }
      if (op.output_dim() != observations[l].size()) {
        throw DimensionError("block " + std::to_string(l + 1) + ": operator output " +
                             std::to_string(op.output_dim()) + " vs observation length " +
                             std::to_string(observations[l].size()));
      }
      if (!op.has_diagonal_gram()) {
        throw CapabilityError("block " + std::to_string(l + 1) +
                              ": solver needs operators with diagonal A^H A");
      }
      if ((observations[l].array() < Real(0)).any()) {
        throw PreconditionError("block " + std::to_string(l + 1) + ": negative magnitude");
      }
    }
  }
};

/// Messages of the block-wise VAMP iteration.
///
/// r2/p2 flow from the denoisers into the LMMSE step, r1/p1 the other way.
/// r1 and p1 are empty until first computed; damping starts after that.
template <typename Real>
struct SolverState {
  GaussianMessage<Real> r2;
  std::vector<GaussianMessage<Real>> p2;
  std::optional<GaussianMessage<Real>> r1;
  std::vector<std::optional<GaussianMessage<Real>>> p1;
  ComplexVector<Real> x1;
  Real eta1 = 0;
  int iteration = 0;

  std::size_t blocks() const { return p2.size(); }
};

template <typename Real>
struct LmmseResult {
  ComplexVector<Real> x2;
  Real eta2;
  ComplexVector<Real> z2;
  Real lambda2;
};

/// Quantities of one inner step, handed to observers. "raw" precisions are
/// extrinsic values before damping.
template <typename Real>
struct StepInfo {
  int iteration;
  int block;  // 1-based
  Real gamma2_in;
  Real eta2;
  Real gamma1_raw;
  Real tau2_in;
  Real lambda2;
  Real tau1_raw;
  Real gamma1;
  Real eta1;
  Real gamma2_out;
  Real tau1;
  Real lambda1;
  Real tau2_out;
};

template <typename Real>
using StepObserver = std::function<void(const SolverState<Real> &, const StepInfo<Real> &)>;

template <typename Real>
struct RunOptions {
  std::optional<ComplexVector<Real>> x_true;
  std::optional<SolverState<Real>> initial_state;
  StepObserver<Real> observer;
};

template <typename Real>
struct RunResult {
  ComplexVector<Real> x_hat;
  std::vector<TraceRecord> trace;
  SolverState<Real> state;
  int iterations_run = 0;
};

namespace detail {

template <typename Real>
struct LmmseCore {
  ComplexVector<Real> x2;
  RealVector<Real> q;
  Real eta2;
};

// Q = (gamma2 I + sum_l tau2_l D_l)^{-1}, x2 = Q (gamma2 r2 + s), with s the
// precomputed sum_l tau2_l A_l^H p2_l.
template <typename Real>
LmmseCore<Real> lmmse_core(const GaussianMessage<Real> &r2, const std::vector<Real> &tau2,
                           const std::vector<RealVector<Real>> &grams,
                           const ComplexVector<Real> &adjoint_sum) {
  RealVector<Real> d = tau2[0] * grams[0];
  for (std::size_t l = 1; l < grams.size(); ++l) {
    d += tau2[l] * grams[l];
  }
  const Real gamma2 = r2.precision();
  RealVector<Real> q = (d.array() + gamma2).inverse().matrix();
  ComplexVector<Real> x2 = q.template cast<Complex<Real>>().cwiseProduct(gamma2 * r2.mean() + adjoint_sum);
  const Real eta2 = Real(1) / (q.sum() / Real(q.size()));
  return {std::move(x2), std::move(q), eta2};
}

template <typename Real>
Real output_precision(const SensingOperator<Real> &op, const RealVector<Real> &q) {
  return Real(1) / (op.row_gram_trace(q) / Real(op.output_dim()));
}

template <typename Real>
ComplexVector<Real> sum_terms(const std::vector<ComplexVector<Real>> &terms) {
  ComplexVector<Real> s = terms[0];
  for (std::size_t l = 1; l < terms.size(); ++l) {
    s += terms[l];
  }
  return s;
}

template <typename F>
auto with_context(const std::string &where, F &&f) {
  try {
    return f();
  } catch (const NumericError &e) {
    throw NumericError(where + ": " + e.what());
  }
}

} // namespace detail

/// LMMSE step for the active block, from scratch (no cached adjoint terms).
template <typename Real>
LmmseResult<Real> lmmse_update(const GaussianMessage<Real> &r2,
                               const std::vector<OperatorPtr<Real>> &operators,
                               const std::vector<GaussianMessage<Real>> &p2, std::size_t active) {
  if (operators.empty() || operators.size() != p2.size() || active >= operators.size()) {
    throw DimensionError("lmmse_update: operator/message count mismatch");
  }
  std::vector<Real> tau2;
  std::vector<RealVector<Real>> grams;
  std::vector<ComplexVector<Real>> terms;
  for (std::size_t l = 0; l < operators.size(); ++l) {
    if (operators[l]->input_dim() != r2.size()) {
      throw DimensionError("lmmse_update: operator input dimension differs from r2");
    }
    tau2.push_back(p2[l].precision());
    grams.push_back(operators[l]->gram_diagonal());
    terms.push_back(p2[l].precision() * operators[l]->adjoint(p2[l].mean()));
  }
  auto core = detail::lmmse_core(r2, tau2, grams, detail::sum_terms(terms));
  ComplexVector<Real> z2 = operators[active]->apply(core.x2);
  const Real lambda2 = detail::output_precision(*operators[active], core.q);
  return {std::move(core.x2), core.eta2, std::move(z2), lambda2};
}

/// Prior-matched input message, zero mean; output messages with the observed
/// magnitudes and uniformly random phases, precision init_tau_scale / mean(y^2).
template <typename Real>
SolverState<Real> initialize_state(const Problem<Real> &problem, Real prior_precision,
                                   const SolverConfig<Real> &config, RngHandle &rng) {
  problem.validate();
  const Eigen::Index n = problem.signal_dim();
  std::vector<GaussianMessage<Real>> p2;
  for (const auto &y : problem.observations) {
    ComplexVector<Real> mean(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      mean[i] = std::polar(y[i], rng.phase<Real>());
    }
    const Real energy = y.squaredNorm() / Real(y.size());
    Real tau = energy > Real(0) ? config.init_tau_scale / energy : Real(kPrecisionMax);
    if (!(tau < Real(kPrecisionMax))) {
      tau = Real(1);
    }
    p2.emplace_back(std::move(mean), tau);
  }
  SolverState<Real> state{GaussianMessage<Real>(ComplexVector<Real>::Zero(n), prior_precision),
                          std::move(p2),
                          std::nullopt,
                          std::vector<std::optional<GaussianMessage<Real>>>(problem.blocks()),
                          ComplexVector<Real>::Zero(n),
                          prior_precision,
                          0};
  return state;
}

namespace detail {

template <typename Real, typename Prior>
class Engine {
public:
  Engine(const Problem<Real> &problem, const Prior &prior, const RicianChannel<Real> &channel,
         const SolverConfig<Real> &config, RngHandle &rng, const RunOptions<Real> &options)
      : problem_(problem), prior_(prior), channel_(channel), config_(config), rng_(rng),
        options_(options),
        state_(options.initial_state ? *options.initial_state
                                     : initialize_state(problem, Real(prior.precision()), config,
                                                        rng)) {
    if (state_.blocks() != problem.blocks() || state_.r2.size() != problem.signal_dim()) {
      throw DimensionError("initial state does not match the problem");
    }
    if (options_.x_true && options_.x_true->size() != problem.signal_dim()) {
      throw DimensionError("x_true length differs from the signal dimension");
    }
    state_.p1.resize(problem.blocks());
    for (const auto &op : problem.operators) {
      grams_.push_back(op->gram_diagonal());
    }
    for (std::size_t l = 0; l < problem.blocks(); ++l) {
      terms_.push_back(adjoint_term(l));
    }
  }

  RunResult<Real> run() {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(problem_.blocks());
    std::iota(order.begin(), order.end(), std::size_t(0));
    int done = 0;
    for (int k = 0; k < config_.iterations; ++k) {
      const ComplexVector<Real> previous = state_.x1;
      if (config_.block_order == BlockOrder::RandomPermutation) {
        std::shuffle(order.begin(), order.end(), rng_.engine());
      }
      if (config_.schedule == Schedule::Sequential) {
        for (std::size_t l : order) {
          sequential_step(k, l);
          record(k, l, start);
        }
      } else {
        parallel_step(k);
        for (std::size_t l : order) {
          record(k, l, start);
        }
      }
      state_.iteration = k + 1;
      done = k + 1;
      if (config_.early_stop > Real(0) && previous.squaredNorm() > Real(0)) {
        const Real change = (state_.x1 - previous).norm() / previous.norm();
        if (change < config_.early_stop) {
          break;
        }
      }
    }
    return {state_.x1, std::move(trace_), state_, done};
  }

private:
  ComplexVector<Real> adjoint_term(std::size_t l) const {
    const auto &msg = state_.p2[l];
    return msg.precision() * problem_.operators[l]->adjoint(msg.mean());
  }

  std::vector<Real> output_precisions() const {
    std::vector<Real> tau2;
    for (const auto &m : state_.p2) {
      tau2.push_back(m.precision());
    }
    return tau2;
  }

  GaussianMessage<Real> damp(GaussianMessage<Real> raw,
                             const std::optional<GaussianMessage<Real>> &old) const {
    if (!old) {
      return raw;
    }
    return damped_update(raw, *old, config_.damping);
  }

  static std::string where(int k, std::size_t l, const char *what) {
    return "iteration " + std::to_string(k) + ", block " + std::to_string(l + 1) + ", " + what;
  }

  // One pass of the update for block l, all global quantities refreshed.
  void sequential_step(int k, std::size_t l) {
    const auto &op = *problem_.operators[l];
    StepInfo<Real> info{};
    info.iteration = k;
    info.block = static_cast<int>(l) + 1;

    auto core = lmmse_core(state_.r2, output_precisions(), grams_, sum_terms(terms_));
    const ComplexVector<Real> z2 = op.apply(core.x2);
    const Real lambda2 = output_precision(op, core.q);
    info.gamma2_in = state_.r2.precision();
    info.eta2 = core.eta2;
    info.tau2_in = state_.p2[l].precision();
    info.lambda2 = lambda2;

    auto r1_raw = with_context(where(k, l, "r1"), [&] {
      return ep_extrinsic(core.x2, core.eta2, state_.r2.mean(), state_.r2.precision());
    });
    auto p1_raw = with_context(where(k, l, "p1"), [&] {
      return ep_extrinsic(z2, lambda2, state_.p2[l].mean(), state_.p2[l].precision());
    });
    info.gamma1_raw = r1_raw.precision();
    info.tau1_raw = p1_raw.precision();
    state_.r1 = damp(std::move(r1_raw), state_.r1);
    state_.p1[l] = damp(std::move(p1_raw), state_.p1[l]);

    denoise_and_return(k, l, info);
    terms_[l] = adjoint_term(l);
    notify(info);
  }

  // All blocks updated from one snapshot and committed together.
  void parallel_step(int k) {
    const std::size_t blocks = problem_.blocks();
    auto core = lmmse_core(state_.r2, output_precisions(), grams_, sum_terms(terms_));
    std::vector<StepInfo<Real>> infos(blocks);
    std::vector<GaussianMessage<Real>> p1_raw;
    for (std::size_t l = 0; l < blocks; ++l) {
      const auto &op = *problem_.operators[l];
      const ComplexVector<Real> z2 = op.apply(core.x2);
      const Real lambda2 = output_precision(op, core.q);
      infos[l].iteration = k;
      infos[l].block = static_cast<int>(l) + 1;
      infos[l].gamma2_in = state_.r2.precision();
      infos[l].eta2 = core.eta2;
      infos[l].tau2_in = state_.p2[l].precision();
      infos[l].lambda2 = lambda2;
      p1_raw.push_back(with_context(where(k, l, "p1"), [&] {
        return ep_extrinsic(z2, lambda2, state_.p2[l].mean(), state_.p2[l].precision());
      }));
    }
    auto r1_raw = with_context(where(k, 0, "r1"), [&] {
      return ep_extrinsic(core.x2, core.eta2, state_.r2.mean(), state_.r2.precision());
    });
    for (auto &info : infos) {
      info.gamma1_raw = r1_raw.precision();
    }
    state_.r1 = damp(std::move(r1_raw), state_.r1);
    for (std::size_t l = 0; l < blocks; ++l) {
      infos[l].tau1_raw = p1_raw[l].precision();
      state_.p1[l] = damp(std::move(p1_raw[l]), state_.p1[l]);
    }

    denoise_input(k, 0, infos);
    for (std::size_t l = 0; l < blocks; ++l) {
      denoise_output(k, l, infos[l]);
    }
    for (std::size_t l = 0; l < blocks; ++l) {
      terms_[l] = adjoint_term(l);
    }
    for (const auto &info : infos) {
      notify(info);
    }
  }

  void denoise_and_return(int k, std::size_t l, StepInfo<Real> &info) {
    std::vector<StepInfo<Real>> one{info};
    denoise_input(k, l, one);
    info = one.front();
    denoise_output(k, l, info);
  }

  void denoise_input(int k, std::size_t l, std::vector<StepInfo<Real>> &infos) {
    const auto &r1 = *state_.r1;
    auto belief = with_context(where(k, l, "x1"), [&] { return prior_.denoise(r1.mean(), r1.precision()); });
    state_.r2 = with_context(where(k, l, "r2"), [&] {
      return ep_extrinsic(belief.mean(), belief.precision(), r1.mean(), r1.precision());
    });
    state_.x1 = belief.mean();
    state_.eta1 = belief.precision();
    for (auto &info : infos) {
      info.gamma1 = r1.precision();
      info.eta1 = belief.precision();
      info.gamma2_out = state_.r2.precision();
    }
  }

  void denoise_output(int k, std::size_t l, StepInfo<Real> &info) {
    const auto &p1 = *state_.p1[l];
    auto belief = with_context(where(k, l, "z1"), [&] {
      return rician_denoise(channel_, p1.mean(), p1.precision(), problem_.observations[l]);
    });
    state_.p2[l] = with_context(where(k, l, "p2"), [&] {
      return ep_extrinsic(belief.mean(), belief.precision(), p1.mean(), p1.precision());
    });
    info.tau1 = p1.precision();
    info.lambda1 = belief.precision();
    info.tau2_out = state_.p2[l].precision();
  }

  void notify(const StepInfo<Real> &info) const {
    if (options_.observer) {
      options_.observer(state_, info);
    }
  }

  void record(int k, std::size_t l, std::chrono::steady_clock::time_point start) {
    TraceRecord rec;
    rec.iteration = k;
    rec.block = static_cast<int>(l) + 1;
    if (options_.x_true) {
      rec.nmse_db = static_cast<double>(nmse_db(*options_.x_true, state_.x1));
    }
    rec.eta1 = static_cast<double>(state_.eta1);
    rec.gamma1 = static_cast<double>(state_.r1->precision());
    rec.tau1 = static_cast<double>(state_.p1[l]->precision());
    if (config_.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    trace_.push_back(rec);
  }

  const Problem<Real> &problem_;
  const Prior &prior_;
  const RicianChannel<Real> &channel_;
  const SolverConfig<Real> &config_;
  RngHandle &rng_;
  const RunOptions<Real> &options_;
  SolverState<Real> state_;
  std::vector<RealVector<Real>> grams_;
  std::vector<ComplexVector<Real>> terms_;
  std::vector<TraceRecord> trace_;
};

} // namespace detail

/// Block-wise VAMP over the sensing blocks of `problem`.
///
/// Sequential schedule: each block runs LMMSE, extrinsic exchange, denoising
/// and extrinsic exchange in turn, with the shared input-side messages
/// refreshed between blocks. Parallel schedule: all blocks are computed from
/// one snapshot and committed together. Damping is applied to r1 and p1.
template <typename Real, typename Prior>
  requires InputDenoiser<Prior, Real>
RunResult<Real> stochastic_vamp_run(const Problem<Real> &problem, const Prior &prior,
                                    const RicianChannel<Real> &channel,
                                    const SolverConfig<Real> &config, RngHandle &rng,
                                    const RunOptions<Real> &options = {}) {
  config.validate();
  problem.validate();
  detail::Engine<Real, Prior> engine(problem, prior, channel, config, rng, options);
  return engine.run();
}

/// The same blocks viewed as one concatenated measurement [A1; ...; AL] with
/// observation [y1; ...; yL].
template <typename Real>
Problem<Real> concatenate(const Problem<Real> &problem) {
  problem.validate();
  Eigen::Index total = 0;
  for (const auto &y : problem.observations) {
    total += y.size();
  }
  Magnitudes<Real> y(total);
  Eigen::Index offset = 0;
  for (const auto &block : problem.observations) {
    y.segment(offset, block.size()) = block;
    offset += block.size();
  }
  Problem<Real> out;
  out.operators.push_back(std::make_shared<ConcatenatedOperator<Real>>(problem.operators));
  out.observations.push_back(std::move(y));
  return out;
}

/// Collapse a per-block state onto the concatenated problem. All output-side
/// precisions must agree, since the concatenated model has a single tau.
template <typename Real>
SolverState<Real> concatenate(const SolverState<Real> &state) {
  Eigen::Index total = 0;
  for (const auto &m : state.p2) {
    total += m.size();
    if (m.precision() != state.p2.front().precision()) {
      throw PreconditionError("concatenate: output-side precisions differ across blocks");
    }
  }
  ComplexVector<Real> mean(total);
  Eigen::Index offset = 0;
  for (const auto &m : state.p2) {
    mean.segment(offset, m.size()) = m.mean();
    offset += m.size();
  }
  SolverState<Real> out{state.r2, {GaussianMessage<Real>(std::move(mean), state.p2.front().precision())},
                        state.r1, std::vector<std::optional<GaussianMessage<Real>>>(1),
                        state.x1, state.eta1, state.iteration};
  return out;
}

/// Vanilla VAMP: one shared (p, tau) over the concatenated measurement.
/// `options.initial_state`, if set, must already be in concatenated form.
template <typename Real, typename Prior>
  requires InputDenoiser<Prior, Real>
RunResult<Real> vamp_run(const Problem<Real> &problem, const Prior &prior,
                         const RicianChannel<Real> &channel, SolverConfig<Real> config,
                         RngHandle &rng, const RunOptions<Real> &options = {}) {
  config.schedule = Schedule::Parallel;
  config.block_order = BlockOrder::Fixed;
  return stochastic_vamp_run(concatenate(problem), prior, channel, config, rng, options);
}

} // namespace stovamp
