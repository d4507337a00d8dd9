#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include <stovamp/sensing.hpp>

using namespace stovamp;
using Vec = ComplexVector<double>;
using Mat = ComplexMatrix<double>;
using cd = std::complex<double>;

namespace {

double adjoint_mismatch(const SensingOperator<double> &op, RngHandle &rng) {
  Vec x = sample_standard_complex_gaussian(op.input_dim(), rng);
  Vec u = sample_standard_complex_gaussian(op.output_dim(), rng);
  Vec ax = op.apply(x);
  return std::abs(ax.dot(u) - x.dot(op.adjoint(u))) / (ax.norm() * u.norm());
}

Mat dense_of(const SensingOperator<double> &op) {
  Mat a(op.output_dim(), op.input_dim());
  for (Eigen::Index j = 0; j < op.input_dim(); ++j) {
    a.col(j) = op.apply(Vec::Unit(op.input_dim(), j));
  }
  return a;
}

} // namespace

TEST_CASE("dense operator basics") {
  DenseOperator<double> id(Mat::Identity(4, 4));
  RngHandle rng(1);
  Vec x = sample_standard_complex_gaussian(4, rng);
  CHECK(id.apply(x) == x);

  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 3;
  DenseOperator<double> diag(d);
  REQUIRE(diag.has_diagonal_gram());
  CHECK(diag.gram_diagonal()[0] == doctest::Approx(4));
  CHECK(diag.gram_diagonal()[1] == doctest::Approx(9));
  CHECK(row_gram_trace(diag, RealVector<double>(RealVector<double>::Ones(2))) == doctest::Approx(13));

  DenseOperator<double> full(Mat::Ones(3, 2));
  CHECK_FALSE(full.has_diagonal_gram());
  CHECK_THROWS_AS(full.gram_diagonal(), CapabilityError);
  CHECK_THROWS_AS(full.row_gram_trace(RealVector<double>::Ones(2)), CapabilityError);
  CHECK_THROWS_AS(full.apply(Vec::Ones(3)), DimensionError);
  CHECK_THROWS_AS(full.adjoint(Vec::Ones(2)), DimensionError);
}

TEST_CASE("haar columns are orthonormal") {
  RngHandle rng(42);
  for (auto [m, n] : {std::pair{1, 1}, std::pair{8, 3}, std::pair{64, 64}, std::pair{200, 80}}) {
    auto a = sample_haar_columns(m, n, rng);
    CHECK((a.matrix().adjoint() * a.matrix() - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(a.gram_diagonal() == RealVector<double>::Ones(n));
    Vec x = sample_standard_complex_gaussian(n, rng);
    CHECK(std::abs(a.apply(x).norm() - x.norm()) < 1e-10 * x.norm());
    CHECK((a.adjoint(a.apply(x)) - x).norm() < 1e-10 * x.norm());
  }
  auto one = sample_haar_columns(1, 1, rng);
  CHECK(std::abs(std::abs(one.matrix()(0, 0)) - 1.0) < 1e-14);
  CHECK_THROWS_AS(sample_haar_columns(3, 4, rng), DimensionError);
}

TEST_CASE("haar first column is uniform on the sphere") {
  // |A_11|^2 ~ Beta(1, m-1) for a uniformly distributed unit vector in C^m.
  const int m = 64, trials = 10000;
  std::vector<double> s;
  double mean = 0;
  for (int seed = 0; seed < trials; ++seed) {
    RngHandle rng(seed, 9);
    auto a = sample_haar_columns(m, 1, rng);
    s.push_back(std::norm(a.matrix()(0, 0)));
    mean += s.back() / trials;
  }
  const double var = (m - 1.0) / (m * m * (m + 1.0));
  CHECK(std::abs(mean - 1.0 / m) < 3 * std::sqrt(var / trials));

  std::sort(s.begin(), s.end());
  double ks = 0;
  for (int i = 0; i < trials; ++i) {
    const double cdf = 1 - std::pow(1 - s[i], m - 1);
    ks = std::max({ks, std::abs(cdf - double(i) / trials), std::abs(cdf - double(i + 1) / trials)});
  }
  CHECK(ks < 1.63 / std::sqrt(double(trials)));
}

TEST_CASE("haar distribution is invariant under a fixed rotation") {
  // Entry magnitudes of U A and A should follow the same law.
  const int m = 16, trials = 4000;
  RngHandle fixed(77);
  const Mat u = sample_haar_columns(m, m, fixed).matrix();
  double plain = 0, rotated = 0;
  for (int seed = 0; seed < trials; ++seed) {
    RngHandle rng(seed, 4);
    Mat a = sample_haar_columns(m, 2, rng).matrix();
    plain += std::pow(std::norm(a(3, 1)), 2) / trials;
    rotated += std::pow(std::norm((u * a)(3, 1)), 2) / trials;
  }
  // E|a|^4 = 2 / (m (m + 1)) for a uniform unit vector.
  const double expect = 2.0 / (m * (m + 1.0));
  CHECK(plain == doctest::Approx(expect).epsilon(0.08));
  CHECK(rotated == doctest::Approx(expect).epsilon(0.08));
}

TEST_CASE("coded diffraction operator") {
  RngHandle rng(5);
  auto ops = sample_cdp_operators(8, 16, 3, rng);
  REQUIRE(ops.size() == 3);
  CHECK(ops[0]->phases() != ops[1]->phases());
  const Eigen::Index n = 8 * 16;
  for (const auto &op : ops) {
    CHECK(op->input_dim() == n);
    CHECK(op->output_dim() == n);
    CHECK((op->phases().array() >= 0).all());
    CHECK((op->phases().array() < 2 * M_PI).all());

    Vec impulse = Vec::Unit(n, 0);
    Vec z = op->apply(impulse);
    CHECK((z.cwiseAbs().array() - 1 / std::sqrt(double(n))).abs().maxCoeff() < 1e-14);

    Vec x = sample_standard_complex_gaussian(n, rng);
    CHECK(std::abs(op->apply(x).norm() - x.norm()) < 1e-10 * x.norm());
    CHECK((op->adjoint(op->apply(x)) - x).norm() < 1e-10 * x.norm());
    CHECK(op->gram_diagonal() == RealVector<double>::Ones(n));
    CHECK(row_gram_trace(*op, RealVector<double>(RealVector<double>::Constant(n, 0.3))) == doctest::Approx(0.3 * n));
  }
  CHECK(sample_cdp_operators(256, 256, 3, rng)[2]->input_dim() == 65536);
  CHECK_THROWS_AS(sample_cdp_operators(4, 4, 0, rng), DimensionError);
}

TEST_CASE("coded diffraction matches an explicit masked DFT") {
  const int h = 4, w = 6, n = h * w;
  RngHandle rng(8);
  auto op = sample_cdp_operators(h, w, 1, rng).front();
  Vec x = sample_standard_complex_gaussian(n, rng);
  Vec expect(n);
  for (int k1 = 0; k1 < h; ++k1) {
    for (int k2 = 0; k2 < w; ++k2) {
      cd acc = 0;
      for (int a = 0; a < h; ++a) {
        for (int b = 0; b < w; ++b) {
          const double ang = -2 * M_PI * (double(k1 * a) / h + double(k2 * b) / w);
          acc += std::polar(1.0, op->phases()[a * w + b] + ang) * x[a * w + b];
        }
      }
      expect[k1 * w + k2] = acc / std::sqrt(double(n));
    }
  }
  CHECK((op->apply(x) - expect).norm() < 1e-12 * expect.norm());
}

TEST_CASE("fft counter counts one per apply and adjoint") {
  RngHandle rng(1);
  auto op = sample_cdp_operators(4, 4, 1, rng).front();
  op->reset_fft_count();
  Vec x = Vec::Ones(16);
  op->apply(x);
  op->adjoint(x);
  op->apply(x);
  CHECK(op->fft_count() == 3);
}

TEST_CASE("adjoint consistency on random pairs") {
  RngHandle rng(99);
  auto haar = std::make_shared<HaarOperator<double>>(sample_haar_columns(40, 24, rng));
  auto cdp = sample_cdp_operators(4, 6, 2, rng);
  DenseOperator<double> dense(Mat::Random(10, 7));
  ConcatenatedOperator<double> cat({cdp[0], cdp[1]});
  for (int trial = 0; trial < 100; ++trial) {
    CHECK(adjoint_mismatch(*haar, rng) < 1e-10);
    CHECK(adjoint_mismatch(*cdp[0], rng) < 1e-10);
    CHECK(adjoint_mismatch(dense, rng) < 1e-10);
    CHECK(adjoint_mismatch(cat, rng) < 1e-10);
  }
}

TEST_CASE("row gram trace matches dense brute force") {
  RngHandle rng(17);
  std::vector<OperatorPtr<double>> ops;
  ops.push_back(std::make_shared<HaarOperator<double>>(sample_haar_columns(64, 32, rng)));
  for (auto &c : sample_cdp_operators(8, 8, 2, rng)) {
    ops.push_back(c);
  }
  Mat d = Mat::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    d(i, i) = cd(i + 1, 0.5 * i);
  }
  ops.push_back(std::make_shared<DenseOperator<double>>(d));
  for (const auto &op : ops) {
    const Mat a = dense_of(*op);
    RealVector<double> q = RealVector<double>::Random(op->input_dim()).array().abs() + 0.1;
    const double brute = (a * q.cast<cd>().asDiagonal() * a.adjoint()).trace().real();
    CHECK(std::abs(op->row_gram_trace(q) - brute) < 1e-10 * brute);
    CHECK((op->gram_diagonal() - (a.adjoint() * a).diagonal().real()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("concatenated operator stacks blocks") {
  RngHandle rng(4);
  auto a = std::make_shared<HaarOperator<double>>(sample_haar_columns(6, 4, rng));
  auto b = std::make_shared<HaarOperator<double>>(sample_haar_columns(5, 4, rng));
  ConcatenatedOperator<double> cat({a, b});
  CHECK(cat.output_dim() == 11);
  CHECK(cat.offset(1) == 6);
  Vec x = sample_standard_complex_gaussian(4, rng);
  Vec z = cat.apply(x);
  CHECK(z.head(6) == a->apply(x));
  CHECK(z.tail(5) == b->apply(x));
  CHECK((cat.gram_diagonal().array() - 2).abs().maxCoeff() < 1e-12);
  auto c = std::make_shared<HaarOperator<double>>(sample_haar_columns(5, 3, rng));
  CHECK_THROWS_AS(ConcatenatedOperator<double>({a, c}), DimensionError);
}
