#pragma once

#include <Eigen/QR>
#include <unsupported/Eigen/FFT>

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace stovamp {

/// Linear map A : C^N -> C^M with its adjoint.
///
/// Operators whose Gram matrix A^H A is diagonal expose that diagonal; the
/// solver's LMMSE step relies on it. Implementations are immutable after
/// construction and apply/adjoint are safe to call concurrently.
template <typename Real>
class SensingOperator {
public:
  using Vector = ComplexVector<Real>;

  virtual ~SensingOperator() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index output_dim() const = 0;
  virtual bool has_diagonal_gram() const = 0;

  Vector apply(const Vector &x) const {
    if (x.size() != input_dim()) {
      throw DimensionError("apply: expected input of length " + std::to_string(input_dim()) +
                           ", got " + std::to_string(x.size()));
    }
    return do_apply(x);
  }

  Vector adjoint(const Vector &u) const {
    if (u.size() != output_dim()) {
      throw DimensionError("adjoint: expected input of length " + std::to_string(output_dim()) +
                           ", got " + std::to_string(u.size()));
    }
    return do_adjoint(u);
  }

  /// diag(A^H A).
  RealVector<Real> gram_diagonal() const {
    if (!has_diagonal_gram()) {
      throw CapabilityError("gram_diagonal: operator does not have a diagonal Gram matrix");
    }
    return do_gram_diagonal();
  }

  /// Tr(A Diag(q) A^H) = sum_i q_i (A^H A)_ii, valid when A^H A is diagonal.
  Real row_gram_trace(const RealVector<Real> &q) const {
    if (q.size() != input_dim()) {
      throw DimensionError("row_gram_trace: q has length " + std::to_string(q.size()));
    }
    return gram_diagonal().dot(q);
  }

protected:
  virtual Vector do_apply(const Vector &x) const = 0;
  virtual Vector do_adjoint(const Vector &u) const = 0;
  virtual RealVector<Real> do_gram_diagonal() const {
    throw CapabilityError("gram_diagonal not implemented");
  }
};

template <typename Real>
using OperatorPtr = std::shared_ptr<const SensingOperator<Real>>;

template <typename Real>
ComplexVector<Real> apply(const SensingOperator<Real> &op, const ComplexVector<Real> &x) {
  return op.apply(x);
}

template <typename Real>
ComplexVector<Real> adjoint(const SensingOperator<Real> &op, const ComplexVector<Real> &u) {
  return op.adjoint(u);
}

template <typename Real>
RealVector<Real> gram_diagonal(const SensingOperator<Real> &op) {
  return op.gram_diagonal();
}

template <typename Real>
Real row_gram_trace(const SensingOperator<Real> &op, const RealVector<Real> &q) {
  return op.row_gram_trace(q);
}

/// Explicit dense matrix. The Gram matrix is formed once at construction to
/// decide whether the diagonal fast path applies.
template <typename Real>
class DenseOperator : public SensingOperator<Real> {
public:
  using Vector = ComplexVector<Real>;

  explicit DenseOperator(ComplexMatrix<Real> matrix) : matrix_(std::move(matrix)) {
    if (matrix_.size() == 0) {
      throw DimensionError("DenseOperator: empty matrix");
    }
    const ComplexMatrix<Real> gram = matrix_.adjoint() * matrix_;
    gram_diag_ = gram.diagonal().real();
    const Real scale = std::max(gram_diag_.maxCoeff(), Real(1));
    ComplexMatrix<Real> off = gram;
    off.diagonal().setZero();
    diagonal_ = off.cwiseAbs().maxCoeff() <= Real(1e-10) * scale;
  }

  Eigen::Index input_dim() const override { return matrix_.cols(); }
  Eigen::Index output_dim() const override { return matrix_.rows(); }
  bool has_diagonal_gram() const override { return diagonal_; }

  const ComplexMatrix<Real> &matrix() const { return matrix_; }

protected:
  Vector do_apply(const Vector &x) const override { return matrix_ * x; }
  Vector do_adjoint(const Vector &u) const override { return matrix_.adjoint() * u; }
  RealVector<Real> do_gram_diagonal() const override { return gram_diag_; }

private:
  ComplexMatrix<Real> matrix_;
  RealVector<Real> gram_diag_;
  bool diagonal_ = false;
};

/// M x N matrix with orthonormal columns, A^H A = I_N.
template <typename Real>
class HaarOperator : public SensingOperator<Real> {
public:
  using Vector = ComplexVector<Real>;

  explicit HaarOperator(ComplexMatrix<Real> matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() < matrix_.cols() || matrix_.cols() == 0) {
      throw DimensionError("HaarOperator: need rows >= cols > 0");
    }
  }

  Eigen::Index input_dim() const override { return matrix_.cols(); }
  Eigen::Index output_dim() const override { return matrix_.rows(); }
  bool has_diagonal_gram() const override { return true; }

  const ComplexMatrix<Real> &matrix() const { return matrix_; }

protected:
  Vector do_apply(const Vector &x) const override { return matrix_ * x; }
  Vector do_adjoint(const Vector &u) const override { return matrix_.adjoint() * u; }
  RealVector<Real> do_gram_diagonal() const override {
    return RealVector<Real>::Ones(matrix_.cols());
  }

private:
  ComplexMatrix<Real> matrix_;
};

/// Haar-distributed m x n matrix with orthonormal columns: QR of a complex
/// Ginibre matrix, with the phases of diag(R) moved back into Q.
template <typename Real = double>
HaarOperator<Real> sample_haar_columns(Eigen::Index m, Eigen::Index n, RngHandle &rng) {
  if (n <= 0 || m < n) {
    throw DimensionError("sample_haar_columns: need m >= n > 0, got m=" + std::to_string(m) +
                         " n=" + std::to_string(n));
  }
  ComplexMatrix<Real> g(m, n);
  const Real stddev = std::sqrt(Real(0.5));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Real re = rng.normal<Real>(stddev);
      const Real im = rng.normal<Real>(stddev);
      g(i, j) = {re, im};
    }
  }
  Eigen::HouseholderQR<ComplexMatrix<Real>> qr(g);
  ComplexMatrix<Real> q = qr.householderQ() * ComplexMatrix<Real>::Identity(m, n);
  const auto &r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex<Real> d = r(j, j);
    const Real mag = std::abs(d);
    if (mag > Real(0)) {
      q.col(j) *= d / mag;
    }
  }
  return HaarOperator<Real>(std::move(q));
}

/// A = F P: unit-modulus phase mask P followed by the unitary 2D DFT F on an
/// H x W image flattened row-major.
template <typename Real>
class CodedDiffractionOperator : public SensingOperator<Real> {
public:
  using Vector = ComplexVector<Real>;

  CodedDiffractionOperator(Eigen::Index height, Eigen::Index width, RealVector<Real> phases)
      : height_(height), width_(width), phases_(std::move(phases)) {
    if (height <= 0 || width <= 0 || phases_.size() != height * width) {
      throw DimensionError("CodedDiffractionOperator: mask size does not match image");
    }
    mask_ = phases_.unaryExpr([](Real t) { return std::polar(Real(1), t); });
  }

  CodedDiffractionOperator(const CodedDiffractionOperator &other)
      : height_(other.height_), width_(other.width_), phases_(other.phases_),
        mask_(other.mask_), fft_count_(other.fft_count_.load()) {}

  Eigen::Index input_dim() const override { return height_ * width_; }
  Eigen::Index output_dim() const override { return height_ * width_; }
  bool has_diagonal_gram() const override { return true; }

  Eigen::Index height() const { return height_; }
  Eigen::Index width() const { return width_; }
  const RealVector<Real> &phases() const { return phases_; }

  /// Number of 2D transforms performed so far (one per apply or adjoint).
  std::uint64_t fft_count() const { return fft_count_.load(); }
  void reset_fft_count() const { fft_count_.store(0); }

protected:
  Vector do_apply(const Vector &x) const override {
    Vector buf = mask_.cwiseProduct(x);
    transform_2d(buf, false);
    return buf;
  }

  Vector do_adjoint(const Vector &u) const override {
    Vector buf = u;
    transform_2d(buf, true);
    return mask_.conjugate().cwiseProduct(buf);
  }

  RealVector<Real> do_gram_diagonal() const override {
    return RealVector<Real>::Ones(input_dim());
  }

private:
  // Unitary 2D DFT (or its inverse) in place: rows, then columns, then 1/sqrt(N).
  void transform_2d(Vector &buf, bool inverse) const {
    ++fft_count_;
    Eigen::FFT<Real> fft;
    fft.SetFlag(Eigen::FFT<Real>::Unscaled);
    std::vector<Complex<Real>> in(std::max(height_, width_));
    std::vector<Complex<Real>> out(in.size());
    auto run = [&](Eigen::Index n) {
      if (inverse) {
        fft.inv(out.data(), in.data(), n);
      } else {
        fft.fwd(out.data(), in.data(), n);
      }
    };
    for (Eigen::Index r = 0; r < height_; ++r) {
      std::copy_n(buf.data() + r * width_, width_, in.begin());
      run(width_);
      std::copy_n(out.begin(), width_, buf.data() + r * width_);
    }
    for (Eigen::Index c = 0; c < width_; ++c) {
      for (Eigen::Index r = 0; r < height_; ++r) {
        in[r] = buf[r * width_ + c];
      }
      run(height_);
      for (Eigen::Index r = 0; r < height_; ++r) {
        buf[r * width_ + c] = out[r];
      }
    }
    buf *= Real(1) / std::sqrt(Real(height_ * width_));
  }

  Eigen::Index height_;
  Eigen::Index width_;
  RealVector<Real> phases_;
  Vector mask_;
  mutable std::atomic<std::uint64_t> fft_count_{0};
};

/// L independent coded-diffraction operators with i.i.d. uniform mask phases.
template <typename Real = double>
std::vector<std::shared_ptr<CodedDiffractionOperator<Real>>>
sample_cdp_operators(Eigen::Index height, Eigen::Index width, int blocks, RngHandle &rng) {
  if (height <= 0 || width <= 0 || blocks < 1) {
    throw DimensionError("sample_cdp_operators: need positive image size and L >= 1");
  }
  std::vector<std::shared_ptr<CodedDiffractionOperator<Real>>> ops;
  ops.reserve(blocks);
  for (int l = 0; l < blocks; ++l) {
    RealVector<Real> phases(height * width);
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
      phases[i] = rng.phase<Real>();
    }
    ops.push_back(std::make_shared<CodedDiffractionOperator<Real>>(height, width, std::move(phases)));
  }
  return ops;
}

/// Vertical stack [A1; ...; AL] of operators sharing an input space.
template <typename Real>
class ConcatenatedOperator : public SensingOperator<Real> {
public:
  using Vector = ComplexVector<Real>;

  explicit ConcatenatedOperator(std::vector<OperatorPtr<Real>> blocks)
      : blocks_(std::move(blocks)) {
    if (blocks_.empty()) {
      throw DimensionError("ConcatenatedOperator: no blocks");
    }
    offsets_.push_back(0);
    for (const auto &b : blocks_) {
      if (b->input_dim() != blocks_.front()->input_dim()) {
        throw DimensionError("ConcatenatedOperator: blocks disagree on input dimension");
      }
      offsets_.push_back(offsets_.back() + b->output_dim());
    }
  }

  Eigen::Index input_dim() const override { return blocks_.front()->input_dim(); }
  Eigen::Index output_dim() const override { return offsets_.back(); }
  bool has_diagonal_gram() const override {
    return std::all_of(blocks_.begin(), blocks_.end(),
                       [](const auto &b) { return b->has_diagonal_gram(); });
  }

  const std::vector<OperatorPtr<Real>> &blocks() const { return blocks_; }
  Eigen::Index offset(std::size_t block) const { return offsets_[block]; }

protected:
  Vector do_apply(const Vector &x) const override {
    Vector z(output_dim());
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      z.segment(offsets_[l], blocks_[l]->output_dim()) = blocks_[l]->apply(x);
    }
    return z;
  }

  Vector do_adjoint(const Vector &u) const override {
    Vector x = blocks_[0]->adjoint(u.head(blocks_[0]->output_dim()));
    for (std::size_t l = 1; l < blocks_.size(); ++l) {
      x += blocks_[l]->adjoint(u.segment(offsets_[l], blocks_[l]->output_dim()));
    }
    return x;
  }

  RealVector<Real> do_gram_diagonal() const override {
    RealVector<Real> d = blocks_[0]->gram_diagonal();
    for (std::size_t l = 1; l < blocks_.size(); ++l) {
      d += blocks_[l]->gram_diagonal();
    }
    return d;
  }

private:
  std::vector<OperatorPtr<Real>> blocks_;
  std::vector<Eigen::Index> offsets_;
};

} // namespace stovamp
