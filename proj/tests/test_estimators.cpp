// SPDX-License-Identifier: Apache-2.0
#include "dircov/errors.hpp"
#include "dircov/estimators.hpp"
#include "dircov/randgen.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace dircov;
using dircov::test::max_abs;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Textbook two-pass covariance with divisor N, written independently of the library.
Matrix oracle_covariance(const Matrix& x) {
  const Vector mu = x.colwise().mean();
  Matrix c = Matrix::Zero(x.cols(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector d = x.row(i).transpose() - mu;
    c += d * d.transpose();
  }
  return c / static_cast<double>(x.rows());
}

Dataset gaussian(Index n, Index d, Rng& rng) {
  return sample_gaussian(make_sigma_identity(d), n, rng);
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("Dataset validation") {
  CHECK_THROWS_AS(Dataset(Matrix(0, 2)), InputError);
  CHECK_THROWS_AS(Dataset(Matrix(2, 0)), InputError);
  Matrix nan = Matrix::Zero(2, 2);
  nan(1, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset{nan}, InputError);
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 2), Vector::Zero(2)), InputError);
  Vector yinf = Vector::Zero(3);
  yinf(0) = INFINITY;
  CHECK_THROWS_AS(Dataset(Matrix::Zero(3, 2), yinf), InputError);
  const Dataset d(Matrix::Zero(3, 2));
  CHECK_FALSE(d.has_y());
  CHECK_THROWS_AS(d.y(), InputError);
  CHECK_THROWS_AS(cross_covariance(d), InputError);
  CHECK_THROWS_AS(ols_fit(d), InputError);
}

TEST_CASE("sample_mean examples") {
  CHECK(sample_mean(Dataset(rows({{1.5, -2.0}}))) == vec({1.5, -2.0}));
  CHECK(max_abs(sample_mean(Dataset(rows({{1, 0}, {-1, 0}})))) == 0.0);
  CHECK(max_abs(sample_mean(Dataset(rows({{1, 2}, {3, 4}, {5, 6}}))) - vec({3, 4})) <= 1e-15);
  const Dataset same(rows({{0.1, 0.7}, {0.1, 0.7}, {0.1, 0.7}}));
  CHECK(sample_mean(same) == vec({0.1, 0.7}));
}

TEST_CASE("sample_covariance examples") {
  CHECK(max_abs(sample_covariance(Dataset(rows({{3, 4, 5}}))).matrix()) == 0.0);
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 1.0;
  CHECK(max_abs(sample_covariance(Dataset(rows({{1, 0}, {-1, 0}}))).matrix() - want) == 0.0);
  const Dataset same(rows({{0.1, 0.7}, {0.1, 0.7}, {0.1, 0.7}}));
  CHECK(max_abs(sample_covariance(same).matrix()) == 0.0);
}

TEST_CASE("sample_covariance agrees with a two-pass oracle and is PSD") {
  Rng rng({1, 0});
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.uniform() * 8);
    const Index n = 1 + static_cast<Index>(rng.uniform() * 30);
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) x(i, j) = 3.0 + rng.normal() * (1.0 + j);
    const SymMatrix s = sample_covariance(Dataset(x));
    CHECK(max_abs(s.matrix() - oracle_covariance(x)) <= 1e-10);
    const Vector& ev = s.eigen().eigenvalues;
    CHECK(ev.minCoeff() >= -1e-10 * std::max(ev(0), 0.0));
  }
}

TEST_CASE("second_moment is the uncentered estimate") {
  const Dataset d(rows({{1, 2}, {3, 4}}));
  Matrix want(2, 2);
  want << 5, 7, 7, 10;
  CHECK(max_abs(second_moment(d).matrix() - want) <= 1e-14);
}

TEST_CASE("rank of sample_covariance is at most min(N-1, D)") {
  Rng rng({2, 0});
  for (Index d = 1; d <= 8; ++d) {
    for (Index n = 1; n <= d + 5; ++n) {
      const SymMatrix s = sample_covariance(gaussian(n, d, rng));
      CHECK(numerical_rank(s) <= std::min(n - 1, d));
    }
  }
}

TEST_CASE("sample_precision examples") {
  const Dataset d(rows({{2, 0}, {-2, 0}, {0, 1}, {0, -1}}));
  Matrix cov = Matrix::Zero(2, 2);
  cov(0, 0) = 2.0;
  cov(1, 1) = 0.5;
  CHECK(max_abs(sample_covariance(d).matrix() - cov) <= 1e-15);
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 0.5;
  want(1, 1) = 2.0;
  CHECK(max_abs(sample_precision(d).matrix() - want) <= 1e-14);

  CHECK(max_abs(sample_precision(Dataset(rows({{1, 2, 3}}))).matrix()) == 0.0);

  // Rows +-sqrt(2) e_j give covariance exactly I.
  const double r = std::sqrt(2.0);
  const Dataset iso(rows({{r, 0}, {-r, 0}, {0, r}, {0, -r}}));
  CHECK(max_abs(sample_precision(iso).matrix() - Matrix::Identity(2, 2)) <= 1e-14);
}

TEST_CASE("cross_covariance examples") {
  Rng rng({3, 0});
  const Dataset base = gaussian(20, 3, rng);
  CHECK(max_abs(cross_covariance(base.with_y(Vector::Constant(20, 0.3)))) == 0.0);
  CHECK(max_abs(cross_covariance(Dataset(rows({{1, 0}, {-1, 0}}), vec({1, -1}))) - vec({1, 0})) <= 1e-15);
  const Dataset first = base.with_y(base.x().col(0));
  CHECK(max_abs(cross_covariance(first) - sample_covariance(base).matrix().col(0)) <= 1e-14);
}

TEST_CASE("ols_fit examples") {
  Rng rng({4, 0});
  const Dataset x = gaussian(50, 4, rng);

  const OlsFit zero = ols_fit(x.with_y(Vector::Zero(50)));
  CHECK(zero.intercept == 0.0);
  CHECK(max_abs(zero.coefficients) == 0.0);
  CHECK_FALSE(zero.direction.has_value());

  const OlsFit lin = ols_fit(x.with_y(2.0 * x.x().col(0)));
  Vector e1 = Vector::Zero(4);
  e1(0) = 1.0;
  CHECK(max_abs(lin.coefficients - 2.0 * e1) <= 1e-8);
  REQUIRE(lin.direction.has_value());
  CHECK(max_abs(*lin.direction - e1) <= 1e-8);
  CHECK(std::abs(lin.direction->norm() - 1.0) <= 1e-12);

  const OlsFit c = ols_fit(x.with_y(Vector::Constant(50, -1.25)));
  CHECK(c.intercept == -1.25);
  CHECK(max_abs(c.coefficients) == 0.0);
  CHECK_FALSE(c.direction.has_value());
}

TEST_CASE("ols_fit matches a QR least-squares oracle on full-rank data") {
  Rng rng({5, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.uniform() * 6);
    const Index n = d + 2 + static_cast<Index>(rng.uniform() * 40);
    const Dataset x = gaussian(n, d, rng);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = rng.normal() + x.x()(i, 0);
    const OlsFit fit = ols_fit(x.with_y(y));
    Matrix design(n, d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = x.x();
    const Vector beta = design.colPivHouseholderQr().solve(y);
    CHECK(max_abs(fit.coefficients - beta.tail(d)) <= 1e-9);
    const Vector mu = x.x().colwise().mean();
    CHECK(fit.intercept == doctest::Approx(y.mean()).epsilon(1e-12));
    CHECK(std::abs(beta(0) - (fit.intercept - mu.dot(fit.coefficients))) <= 1e-9);
  }
}

TEST_CASE("translation invariance") {
  Rng rng({6, 0});
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset base = gaussian(30, 4, rng);
    Vector y(30);
    for (Index i = 0; i < 30; ++i) y(i) = std::tanh(base.x()(i, 1)) + 0.1 * rng.normal();
    Vector shift(4);
    for (Index j = 0; j < 4; ++j) shift(j) = 5.0 * rng.normal();
    const Dataset a = base.with_y(y);
    const Dataset b(base.x().rowwise() + shift.transpose(), y);
    CHECK(max_abs(sample_covariance(a).matrix() - sample_covariance(b).matrix()) <= 1e-9);
    CHECK(max_abs(cross_covariance(a) - cross_covariance(b)) <= 1e-9);
    const OlsFit fa = ols_fit(a);
    const OlsFit fb = ols_fit(b);
    CHECK(max_abs(fa.coefficients - fb.coefficients) <= 1e-9);
    CHECK(max_abs(*fa.direction - *fb.direction) <= 1e-9);
  }
}

TEST_CASE("residuals are orthogonal to the centered columns within Im(Sigma_hat)") {
  Rng rng({7, 0});
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.uniform() * 6);
    const Index n = 2 + static_cast<Index>(rng.uniform() * 2 * d);
    const Dataset x = gaussian(n, d, rng);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = rng.normal();
    const Dataset data = x.with_y(y);
    const OlsFit fit = ols_fit(data);
    const Matrix xc = x.x().rowwise() - sample_mean(x).transpose();
    const Vector resid = y - Vector::Constant(n, fit.intercept) - xc * fit.coefficients;
    const SymMatrix s = sample_covariance(x);
    const Index r = numerical_rank(s);
    if (r == 0) continue;
    const Matrix& v = s.eigen().eigenvectors;
    const Vector proj = v.leftCols(r).transpose() * (xc.transpose() * resid);
    CHECK(proj.cwiseAbs().maxCoeff() <= 1e-8 * static_cast<double>(n));
  }
}

TEST_CASE("Dataset subset and CSV round trip") {
  Rng rng({8, 0});
  const Dataset x = gaussian(5, 3, rng);
  Vector y(5);
  for (Index i = 0; i < 5; ++i) y(i) = rng.normal();
  const Dataset data = x.with_y(y);
  const Dataset sub = data.rows({4, 0});
  CHECK(sub.x().row(0) == data.x().row(4));
  CHECK(sub.y()(1) == data.y()(0));
  CHECK_THROWS_AS(data.rows({5}), InputError);

  std::stringstream ss;
  write_dataset_csv(ss, data);
  const std::string text = ss.str();
  CHECK(text.rfind("x1,x2,x3,y\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  const Dataset back = read_dataset_csv(ss);
  CHECK(back.x() == data.x());
  CHECK(back.y() == data.y());

  std::istringstream nohead("1,2\n");
  CHECK_THROWS_AS(read_dataset_csv(nohead), InputError);
  std::istringstream ragged("x1,x2\n1,2\n3\n");
  CHECK_THROWS_AS(read_dataset_csv(ragged), InputError);
  std::istringstream crlf("x1,y\r\n1,2\r\n3,4\r\n");
  const Dataset c = read_dataset_csv(crlf);
  CHECK(c.n() == 2);
  CHECK(c.y()(1) == 4.0);
}

}  // TEST_SUITE
