#pragma once

#include <cmath>
#include <concepts>

#include "core.hpp"

namespace stovamp {

/// Posterior mean and scalar posterior precision returned by a denoiser.
template <typename Real>
using DenoiserResult = GaussianMessage<Real>;

/// Input-side denoiser: posterior of x under a prior times N(x | r, 1/gamma).
/// GaussianPrior is the only model shipped; other priors plug in here.
template <typename P, typename Real>
concept InputDenoiser = requires(const P &prior, const ComplexVector<Real> &r, Real gamma) {
  { prior.denoise(r, gamma) } -> std::same_as<DenoiserResult<Real>>;
  { prior.precision() } -> std::convertible_to<Real>;
};

/// Prior CN(0, variance * I).
template <typename Real>
struct GaussianPrior {
  Real variance = Real(1);

  explicit GaussianPrior(Real v = Real(1)) : variance(v) {
    if (!(v > Real(0)) || !std::isfinite(v)) {
      throw PreconditionError("GaussianPrior: variance must be positive");
    }
  }

  Real precision() const { return Real(1) / variance; }

  DenoiserResult<Real> denoise(const ComplexVector<Real> &r, Real gamma) const {
    if (!(gamma > Real(0))) {
      throw PreconditionError("prior_denoise: gamma must be positive");
    }
    const Real shrink = gamma * variance / (Real(1) + gamma * variance);
    return {shrink * r, precision() + gamma};
  }
};

template <typename Real>
DenoiserResult<Real> prior_denoise(const GaussianPrior<Real> &prior, const ComplexVector<Real> &r,
                                   Real gamma) {
  return prior.denoise(r, gamma);
}

namespace detail {

// I1/I0 and 1 - I1/I0 from the power series of I0 and I1; all terms positive.
template <typename Real>
std::pair<Real, Real> bessel_ratio_series(Real kappa) {
  const Real half = kappa / Real(2);
  const Real q = half * half;
  Real t0 = 1, t1 = half;
  Real s0 = t0, s1 = t1;
  for (int k = 1; k < 500; ++k) {
    t0 *= q / (Real(k) * Real(k));
    t1 *= q / (Real(k) * Real(k + 1));
    s0 += t0;
    s1 += t1;
    if (t0 <= std::numeric_limits<Real>::epsilon() * Real(1e-2) * s0) {
      break;
    }
  }
  const Real ratio = s1 / s0;
  return {ratio, Real(1) - ratio};
}

// Hankel expansion of exp(-x) sqrt(2 pi x) I_nu(x) for nu = 0, 1, summed
// until the terms stop shrinking. The difference S0 - S1 is accumulated term
// by term so that 1 - R keeps full relative accuracy for large kappa.
template <typename Real>
std::pair<Real, Real> bessel_ratio_asymptotic(Real kappa) {
  Real c0 = 1, c1 = 1;
  Real s0 = 1, s1 = 1, diff = 0;
  Real prev = std::numeric_limits<Real>::infinity();
  for (int k = 1; k < 200; ++k) {
    const Real odd = Real(2 * k - 1);
    c0 *= -(Real(0) - odd * odd) / (Real(k) * Real(8) * kappa);
    c1 *= -(Real(4) - odd * odd) / (Real(k) * Real(8) * kappa);
    const Real mag = std::max(std::abs(c0), std::abs(c1));
    if (mag >= prev) {
      break;
    }
    prev = mag;
    s0 += c0;
    s1 += c1;
    diff += c0 - c1;
    if (mag <= std::numeric_limits<Real>::epsilon() * Real(1e-2)) {
      break;
    }
  }
  return {s1 / s0, diff / s0};
}

template <typename Real>
std::pair<Real, Real> bessel_ratio_pair(Real kappa) {
  if (!(kappa >= Real(0))) {
    throw PreconditionError("bessel_ratio: kappa must be non-negative");
  }
  if (kappa < Real(20)) {
    return bessel_ratio_series(kappa);
  }
  if (std::isinf(kappa)) {
    return {Real(1), Real(0)};
  }
  return bessel_ratio_asymptotic(kappa);
}

} // namespace detail

/// R(kappa) = I1(kappa) / I0(kappa), without ever forming I0 or I1.
template <typename Real>
Real bessel_ratio(Real kappa) {
  return detail::bessel_ratio_pair(kappa).first;
}

/// 1 - R(kappa), accurate where R is close to one.
template <typename Real>
Real bessel_ratio_complement(Real kappa) {
  return detail::bessel_ratio_pair(kappa).second;
}

/// Observation channel y = |z + w| with w ~ CN(0, 1/noise_precision).
template <typename Real>
struct RicianChannel {
  Real noise_precision;

  explicit RicianChannel(Real gamma_w) : noise_precision(gamma_w) {
    if (!(gamma_w > Real(0)) || !std::isfinite(gamma_w)) {
      throw PreconditionError("RicianChannel: noise precision must be positive");
    }
  }

  Real noise_variance() const { return Real(1) / noise_precision; }
};

template <typename Real>
struct ScalarPosterior {
  Complex<Real> mean;
  Real variance;
};

/// Posterior mean and variance of a single z ~ CN(p, 1/tau) observed through
/// y = |z + w|.
///
/// With u = z + w ~ CN(p, nu), nu = 1/tau + 1/gamma_w, the phase of u given
/// |u| = y is von Mises around arg p with concentration 2 y |p| / nu, and
/// z | u is Gaussian with gain g = (1/tau) / nu and variance g / gamma_w.
template <typename Real>
ScalarPosterior<Real> rician_posterior(Complex<Real> p, Real tau, Real y, Real gamma_w) {
  const Real nu_p = Real(1) / tau;
  const Real nu_w = Real(1) / gamma_w;
  const Real nu = nu_p + nu_w;
  const Real gain = nu_p / nu;
  const Real keep = nu_w / nu;
  const Real mag = std::abs(p);
  const Real kappa = Real(2) * y * mag / nu;
  const auto [ratio, complement] = detail::bessel_ratio_pair(kappa);
  const Complex<Real> unit = mag > Real(0) ? p / mag : Complex<Real>(0);
  const Complex<Real> u_mean = y * ratio * unit;
  const Real u_var = y * y * complement * (Real(1) + ratio);
  return {keep * p + gain * u_mean, gain * gain * u_var + gain * nu_w};
}

/// Entrywise Rician posterior; the returned precision is the reciprocal of
/// the entry-averaged posterior variance.
template <typename Real>
DenoiserResult<Real> rician_denoise(const RicianChannel<Real> &channel, const ComplexVector<Real> &p,
                                    Real tau, const Magnitudes<Real> &y) {
  if (!(tau > Real(0))) {
    throw PreconditionError("rician_denoise: tau must be positive");
  }
  require_same_size(p, y, "rician_denoise");
  if ((y.array() < Real(0)).any()) {
    throw PreconditionError("rician_denoise: observations must be non-negative");
  }
  ComplexVector<Real> mean(p.size());
  Real total_variance = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto post = rician_posterior(p[i], tau, y[i], channel.noise_precision);
    mean[i] = post.mean;
    total_variance += post.variance;
  }
  const Real avg = total_variance / Real(p.size());
  require_finite(avg, "rician_denoise variance");
  return {std::move(mean), avg > Real(0) ? Real(1) / avg : Real(kPrecisionMax)};
}

} // namespace stovamp
