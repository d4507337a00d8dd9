#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include "core.hpp"

namespace stovamp {

/// Seeded random stream. Identical (seed, stream) pairs reproduce the same
/// scalar sequence. Move-only: a stream has exactly one consumer.
class RngHandle {
public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

  RngHandle(const RngHandle &) = delete;
  RngHandle &operator=(const RngHandle &) = delete;
  RngHandle(RngHandle &&) = default;
  RngHandle &operator=(RngHandle &&) = default;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Independent stream sharing this handle's seed.
  RngHandle substream(std::uint64_t stream) const { return RngHandle(seed_, stream); }

  std::mt19937_64 &engine() { return engine_; }

  template <typename Real = double>
  Real uniform() {
    return std::uniform_real_distribution<Real>(Real(0), Real(1))(engine_);
  }

  template <typename Real = double>
  Real normal(Real stddev = Real(1)) {
    return std::normal_distribution<Real>(Real(0), stddev)(engine_);
  }

  /// Uniform phase in [0, 2pi).
  template <typename Real = double>
  Real phase() {
    return Real(2) * std::numbers::pi_v<Real> * uniform<Real>();
  }

private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// n i.i.d. circular complex Gaussians with unit variance per entry.
template <typename Real = double>
ComplexVector<Real> sample_standard_complex_gaussian(Eigen::Index n, RngHandle &rng) {
  if (n <= 0) {
    throw DimensionError("sample_standard_complex_gaussian: n must be positive");
  }
  const Real stddev = std::sqrt(Real(0.5));
  ComplexVector<Real> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real re = rng.normal<Real>(stddev);
    const Real im = rng.normal<Real>(stddev);
    v[i] = {re, im};
  }
  return v;
}

} // namespace stovamp
