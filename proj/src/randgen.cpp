// SPDX-License-Identifier: Apache-2.0
#include "dircov/randgen.hpp"

#include "dircov/errors.hpp"

#include <cmath>
#include <numbers>

namespace dircov {

namespace {

std::mt19937_64 seeded_engine(const RngStream& s) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(s.master_seed & 0xffffffffu),
      static_cast<std::uint32_t>(s.master_seed >> 32),
      static_cast<std::uint32_t>(s.stream_index & 0xffffffffu),
      static_cast<std::uint32_t>(s.stream_index >> 32),
  };
  return std::mt19937_64(seq);
}

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

}  // namespace

Rng::Rng(RngStream stream) : stream_(stream), engine_(seeded_engine(stream)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::string_view to_string(CovLabel label) {
  switch (label) {
    case CovLabel::setting1: return "setting1";
    case CovLabel::setting2: return "setting2";
    case CovLabel::identity: return "identity";
    case CovLabel::custom: return "custom";
  }
  return "custom";
}

Matrix haar_orthogonal(Index dim, Rng& rng) {
  if (dim < 1) throw InputError("haar_orthogonal: dim must be >= 1");
  const Matrix g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix& r = qr.matrixQR();
  for (Index k = 0; k < dim; ++k) {
    if (r(k, k) < 0) q.col(k) = -q.col(k);
  }
  return q;
}

CovModel make_sigma_setting1(double nu, Rng& rng) {
  if (!(nu > 0.0 && nu <= 1.0)) throw InputError("setting1 requires 0 < nu <= 1");
  constexpr Index kDim = 10;
  const Matrix u = haar_orthogonal(kDim, rng);
  Vector s(kDim);
  s << 1, 1, 1, 1, 1, nu, nu, nu, nu, nu;
  return CovModel{CovLabel::setting1, kDim, nu,
                  SymMatrix(u * s.asDiagonal() * u.transpose())};
}

CovModel make_sigma_setting2(double nu, Index dim) {
  if (!(nu > 0.0 && nu < 1.0)) throw InputError("setting2 requires 0 < nu < 1");
  if (dim < 1) throw InputError("setting2 requires dim >= 1");
  Matrix m(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j)
      m(i, j) = std::pow(nu, static_cast<double>(i > j ? i - j : j - i));
  return CovModel{CovLabel::setting2, dim, nu, SymMatrix(m)};
}

CovModel make_sigma_identity(Index dim) {
  if (dim < 1) throw InputError("identity covariance requires dim >= 1");
  return CovModel{CovLabel::identity, dim, 1.0, SymMatrix::identity(dim)};
}

CovModel make_sigma_custom(const SymMatrix& sigma) {
  return CovModel{CovLabel::custom, sigma.dim(), 0.0, sigma};
}

Dataset sample_gaussian(const CovModel& model, Index n, Rng& rng) {
  if (n < 1) throw InputError("sample_gaussian: N must be >= 1");
  const SymMatrix root = psd_sqrt(model.matrix);
  const Matrix g = gaussian_matrix(n, model.dim, rng);
  return Dataset(g * root.matrix());
}

Dataset sample_ball_uniform(Index dim, Index n, Rng& rng) {
  if (dim < 1 || n < 1) throw InputError("sample_ball_uniform: need D >= 1 and N >= 1");
  Matrix x(n, dim);
  Vector g(dim);
  for (Index i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (Index j = 0; j < dim; ++j) g(j) = rng.normal();
      norm = g.norm();
    } while (norm == 0.0);
    const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    x.row(i) = (radius / norm) * g.transpose();
  }
  return Dataset(std::move(x));
}

Projector random_orthoprojector(Index dim, Index rank, Rng& rng) {
  if (rank < 1 || rank > dim) throw InputError("random_orthoprojector: need 1 <= rank <= D");
  if (rank == dim) return Projector::identity(dim);
  const Matrix u = haar_orthogonal(dim, rng);
  return Projector::from_orthonormal(u.leftCols(rank), dim);
}

}  // namespace dircov
