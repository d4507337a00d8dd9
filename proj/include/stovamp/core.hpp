#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>

#include "errors.hpp"

namespace stovamp {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using ComplexVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using ComplexMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

// Magnitude observations y >= 0. Kept real so that complex arithmetic on
// magnitudes does not type-check by accident.
template <typename Real>
using Magnitudes = RealVector<Real>;

inline constexpr double kPrecisionMin = 1e-11;
inline constexpr double kPrecisionMax = 1e11;

template <typename Real>
constexpr Real clamp_precision(Real precision) {
  return std::clamp(precision, Real(kPrecisionMin), Real(kPrecisionMax));
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived> &v, const std::string &what) {
  if (!v.allFinite()) {
    throw NumericError(what + " contains NaN or Inf");
  }
}

template <typename Real>
  requires std::is_floating_point_v<Real>
void require_finite(Real value, const std::string &what) {
  if (!std::isfinite(value)) {
    throw NumericError(what + " is not finite");
  }
}

template <typename A, typename B>
void require_same_size(const Eigen::MatrixBase<A> &a, const Eigen::MatrixBase<B> &b,
                       const std::string &what) {
  if (a.size() != b.size()) {
    throw DimensionError(what + ": length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

/// Isotropic complex Gaussian N(x | mean, precision^{-1} I).
///
/// The precision is clamped into [kPrecisionMin, kPrecisionMax] on
/// construction and the mean must be finite; once built the message is an
/// immutable value.
template <typename Real>
class GaussianMessage {
public:
  using Vector = ComplexVector<Real>;

  GaussianMessage(Vector mean, Real precision)
      : mean_(std::move(mean)), precision_(clamp_precision(precision)) {
    if (mean_.size() == 0) {
      throw DimensionError("GaussianMessage: empty mean");
    }
    require_finite(precision, "GaussianMessage precision");
    require_finite(mean_, "GaussianMessage mean");
  }

  const Vector &mean() const { return mean_; }
  Real precision() const { return precision_; }
  Real variance() const { return Real(1) / precision_; }
  Eigen::Index size() const { return mean_.size(); }

  /// precision * mean, the quantity that enters linear-Gaussian updates.
  Vector natural_mean() const { return precision_ * mean_; }

private:
  Vector mean_;
  Real precision_;
};

/// Normalized product of two isotropic Gaussians.
template <typename Real>
GaussianMessage<Real> gaussian_product(const GaussianMessage<Real> &a,
                                       const GaussianMessage<Real> &b) {
  require_same_size(a.mean(), b.mean(), "gaussian_product");
  const Real precision = a.precision() + b.precision();
  ComplexVector<Real> mean =
      (a.precision() * a.mean() + b.precision() * b.mean()) / precision;
  return {std::move(mean), precision};
}

/// Extrinsic message: the belief (belief_mean, belief_prec) divided by the
/// incoming message (in_mean, in_prec).
///
/// If the raw precision belief_prec - in_prec falls at or below
/// kPrecisionMin, the precision is floored there and the natural parameter
/// belief_prec*belief_mean - in_prec*in_mean is kept, so the message still
/// contributes the same precision-weighted mean to downstream linear steps.
template <typename Real>
GaussianMessage<Real> ep_extrinsic(const ComplexVector<Real> &belief_mean, Real belief_prec,
                                   const ComplexVector<Real> &in_mean, Real in_prec) {
  require_same_size(belief_mean, in_mean, "ep_extrinsic");
  require_finite(belief_prec, "ep_extrinsic belief precision");
  require_finite(in_prec, "ep_extrinsic incoming precision");
  require_finite(belief_mean, "ep_extrinsic belief mean");
  require_finite(in_mean, "ep_extrinsic incoming mean");

  const Real raw = belief_prec - in_prec;
  const Real precision = std::max(raw, Real(kPrecisionMin));
  ComplexVector<Real> mean = (belief_prec * belief_mean - in_prec * in_mean) / precision;
  return {std::move(mean), precision};
}

/// Precision is blended linearly; the mean is the precision-weighted blend.
template <typename Real>
GaussianMessage<Real> damped_update(const GaussianMessage<Real> &raw,
                                    const GaussianMessage<Real> &old, Real rho) {
  if (!(rho > Real(0) && rho <= Real(1))) {
    throw ConfigError("damping factor must lie in (0, 1], got " + std::to_string(rho));
  }
  require_same_size(raw.mean(), old.mean(), "damped_update");
  if (rho == Real(1)) {
    return raw;
  }
  // Means are blended with precision weights so a floored message cannot drag in a huge mean.
  const Real prec = rho * raw.precision() + (Real(1) - rho) * old.precision();
  ComplexVector<Real> mean =
      (rho * raw.precision() * raw.mean() + (Real(1) - rho) * old.precision() * old.mean()) / prec;
  return {std::move(mean), prec};
}

} // namespace stovamp
