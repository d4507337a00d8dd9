#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "denoisers.hpp"
#include "rng.hpp"

namespace stovamp {

/// Per-(iteration, block) diagnostics of a solver run.
struct TraceRecord {
  int iteration = 0;  // 0-based outer iteration
  int block = 1;      // 1-based block index
  std::optional<double> nmse_db;
  double eta1 = 0;
  double gamma1 = 0;
  double tau1 = 0;
  double wall_ms = 0;
};

/// min over theta of ||x - e^{j theta} xhat||^2 / ||x||^2, in closed form.
template <typename Real>
Real nmse(const ComplexVector<Real> &x, const ComplexVector<Real> &xhat) {
  require_same_size(x, xhat, "nmse");
  const Real energy = x.squaredNorm();
  if (!(energy > Real(0))) {
    throw PreconditionError("nmse: reference signal has zero energy");
  }
  const Real cross = std::abs(x.dot(xhat));
  const Real err = energy + xhat.squaredNorm() - Real(2) * cross;
  return std::max(err, Real(0)) / energy;
}

template <typename Real>
Real nmse_db(const ComplexVector<Real> &x, const ComplexVector<Real> &xhat) {
  return Real(10) * std::log10(nmse(x, xhat));
}

/// The global phase theta minimizing ||x - e^{j theta} xhat||, i.e. arg <xhat, x>.
template <typename Real>
Real optimal_phase(const ComplexVector<Real> &x, const ComplexVector<Real> &xhat) {
  require_same_size(x, xhat, "optimal_phase");
  return std::arg(xhat.dot(x));
}

/// e^{j theta*} xhat, the estimate rotated onto x.
template <typename Real>
ComplexVector<Real> align_phase(const ComplexVector<Real> &x, const ComplexVector<Real> &xhat) {
  return std::polar(Real(1), optimal_phase(x, xhat)) * xhat;
}

/// gamma_w such that mean |z|^2 over all blocks divided by the complex noise
/// variance equals 10^(snr_db/10).
template <typename Real>
Real snr_to_noise_precision(Real snr_db, const std::vector<ComplexVector<Real>> &z_blocks) {
  Real total = 0;
  Eigen::Index count = 0;
  for (const auto &z : z_blocks) {
    total += z.squaredNorm();
    count += z.size();
  }
  if (count == 0 || !(total > Real(0))) {
    throw PreconditionError("snr_to_noise_precision: signal is identically zero");
  }
  const Real noise_variance = std::pow(Real(10), -snr_db / Real(10)) * (total / Real(count));
  return Real(1) / noise_variance;
}

/// y = |z + w|, w ~ CN(0, 1/gamma_w) i.i.d.
template <typename Real>
Magnitudes<Real> generate_observation(const RicianChannel<Real> &channel,
                                      const ComplexVector<Real> &z, RngHandle &rng) {
  const Real stddev = std::sqrt(channel.noise_variance() / Real(2));
  Magnitudes<Real> y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const Real re = rng.normal<Real>(stddev);
    const Real im = rng.normal<Real>(stddev);
    y[i] = std::abs(z[i] + Complex<Real>(re, im));
  }
  return y;
}

} // namespace stovamp
