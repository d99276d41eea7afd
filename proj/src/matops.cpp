// SPDX-License-Identifier: Apache-2.0
#include "dircov/matops.hpp"

#include "dircov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace dircov {

namespace {

constexpr double kSignTieTol = 1e-12;

void fix_sign(Eigen::Ref<Vector> v) {
  Index best = 0;
  double best_abs = std::abs(v(0));
  for (Index k = 1; k < v.size(); ++k) {
    if (std::abs(v(k)) > best_abs + kSignTieTol) {
      best = k;
      best_abs = std::abs(v(k));
    }
  }
  if (v(best) < 0) v = -v;
}

double resolve_rtol(std::optional<double> rtol, Index dim) {
  const double tol = rtol.value_or(default_rtol(dim));
  if (!(tol >= 0) || !std::isfinite(tol)) throw InputError("rtol must be finite and >= 0");
  return tol;
}

// Eigenvalues after the PSD check; negatives within tolerance are returned
// untouched so the caller decides between clamping and dropping.
const EigenDecomp& checked_psd_eigen(const SymMatrix& m, double tol) {
  const EigenDecomp& e = m.eigen();
  const double top = e.eigenvalues(0);
  const double floor = -tol * std::abs(top);
  const double lowest = e.eigenvalues(e.dim() - 1);
  if (lowest < floor) {
    throw NotPsdError("matrix is not PSD: eigenvalue " + std::to_string(lowest) +
                      " below -rtol * lambda_1");
  }
  return e;
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) : cache_(std::make_shared<Cache>()) {
  if (m.rows() != m.cols()) throw InputError("SymMatrix requires a square matrix");
  if (m.rows() < 1) throw InputError("SymMatrix requires dim >= 1");
  m_ = (m + m.transpose()) / 2.0;
}

SymMatrix SymMatrix::identity(Index dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

SymMatrix SymMatrix::zero(Index dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  return SymMatrix(Matrix(diag.asDiagonal()));
}

const EigenDecomp& SymMatrix::eigen() const {
  std::call_once(cache_->once, [this] { cache_->value = sym_eigen(*this); });
  return cache_->value;
}

Projector::Projector(Matrix p, Index rank) : p_(std::move(p)), rank_(rank) {}

Projector Projector::from_orthonormal(const Matrix& basis, Index dim) {
  if (basis.rows() != dim) throw InputError("projector basis has wrong row count");
  if (basis.cols() == 0) return zero(dim);
  Matrix p = basis * basis.transpose();
  p = ((p + p.transpose()) / 2.0).eval();
  return Projector(std::move(p), basis.cols());
}

Projector Projector::identity(Index dim) { return Projector(Matrix::Identity(dim, dim), dim); }

Projector Projector::zero(Index dim) { return Projector(Matrix::Zero(dim, dim), 0); }

Projector Projector::complement() const {
  Matrix q = Matrix::Identity(dim(), dim()) - p_;
  q = ((q + q.transpose()) / 2.0).eval();
  return Projector(std::move(q), dim() - rank_);
}

double default_rtol(Index dim) {
  return static_cast<double>(dim) * std::numeric_limits<double>::epsilon();
}

EigenDecomp sym_eigen(const SymMatrix& m) {
  if (!m.matrix().allFinite()) throw InputError("sym_eigen: non-finite entries");
  const Index d = m.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eigen: solver did not converge");

  // Solver output is ascending; exact ties keep the solver's relative order.
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev(a) > ev(b); });
  EigenDecomp out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  for (Index k = 0; k < d; ++k) {
    out.eigenvalues(k) = ev(order[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }
  for (Index k = 0; k < d; ++k) fix_sign(out.eigenvectors.col(k));
  return out;
}

SymMatrix pinv_psd(const SymMatrix& m, std::optional<double> rtol) {
  const double tol = resolve_rtol(rtol, m.dim());
  const EigenDecomp& e = checked_psd_eigen(m, tol);
  const double cutoff = tol * std::max(e.eigenvalues(0), 0.0);
  Vector inv = Vector::Zero(e.dim());
  for (Index k = 0; k < e.dim(); ++k) {
    if (e.eigenvalues(k) > cutoff) inv(k) = 1.0 / e.eigenvalues(k);
  }
  return SymMatrix(e.eigenvectors * inv.asDiagonal() * e.eigenvectors.transpose());
}

SymMatrix psd_sqrt(const SymMatrix& m, std::optional<double> rtol) {
  const double tol = resolve_rtol(rtol, m.dim());
  const EigenDecomp& e = checked_psd_eigen(m, tol);
  const Vector roots = e.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(e.eigenvectors * roots.asDiagonal() * e.eigenvectors.transpose());
}

Index numerical_rank(const SymMatrix& m, std::optional<double> rtol) {
  const double tol = resolve_rtol(rtol, m.dim());
  const EigenDecomp& e = m.eigen();
  const double cutoff = tol * std::max(e.eigenvalues(0), 0.0);
  Index r = 0;
  for (Index k = 0; k < e.dim(); ++k) {
    if (e.eigenvalues(k) > cutoff) ++r;
  }
  return r;
}

Projector spectral_projector(const EigenDecomp& e, Index i, Index l) {
  if (i < 1 || l < i || l > e.dim()) {
    throw InputError("spectral_projector: need 1 <= i <= l <= D");
  }
  return Projector::from_orthonormal(e.eigenvectors.middleCols(i - 1, l - i + 1), e.dim());
}

double projector_overlap(const Projector& q, const Projector& p) {
  if (q.dim() != p.dim()) throw InputError("projector_overlap: dimension mismatch");
  return spectral_norm(q.matrix() * p.matrix());
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (!m.allFinite()) throw InputError("spectral_norm: non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace dircov
