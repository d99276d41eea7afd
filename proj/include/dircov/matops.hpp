// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <memory>
#include <mutex>
#include <optional>

namespace dircov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Eigenvalues sorted descending, with column k of `eigenvectors` paired with
/// eigenvalues(k). Each column has its largest-magnitude entry positive
/// (lowest index wins among entries tied to within 1e-12).
struct EigenDecomp {
  Vector eigenvalues;
  Matrix eigenvectors;

  Index dim() const { return eigenvalues.size(); }
};

/// Dense real symmetric matrix. The input is symmetrized as (M + M^T) / 2,
/// so entries(i, j) == entries(j, i) holds bit-for-bit. The spectral
/// decomposition is computed on first use and shared between copies.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Index dim);
  static SymMatrix zero(Index dim);
  static SymMatrix diagonal(const Vector& diag);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  const EigenDecomp& eigen() const;

 private:
  struct Cache {
    std::once_flag once;
    EigenDecomp value;
  };

  Matrix m_;
  std::shared_ptr<Cache> cache_;
};

/// Orthogonal projector with its rank. A rank-0 projector is the zero matrix.
class Projector {
 public:
  /// P = V V^T for V with orthonormal columns (not re-orthonormalized).
  static Projector from_orthonormal(const Matrix& basis, Index dim);
  static Projector identity(Index dim);
  static Projector zero(Index dim);

  Index dim() const { return p_.rows(); }
  Index rank() const { return rank_; }
  const Matrix& matrix() const { return p_; }

  /// I - P.
  Projector complement() const;

 private:
  Projector(Matrix p, Index rank);

  Matrix p_;
  Index rank_ = 0;
};

/// Standard numerical-rank tolerance D * machine epsilon, relative to lambda_1.
double default_rtol(Index dim);

EigenDecomp sym_eigen(const SymMatrix& m);

/// Moore-Penrose inverse of a PSD matrix. Eigenvalues <= rtol * max(lambda_1, 0)
/// count as zero; eigenvalues below -rtol * lambda_1 raise NotPsdError.
SymMatrix pinv_psd(const SymMatrix& m, std::optional<double> rtol = std::nullopt);

/// PSD square root, with small negative eigenvalues clamped to zero.
SymMatrix psd_sqrt(const SymMatrix& m, std::optional<double> rtol = std::nullopt);

/// Number of eigenvalues strictly above rtol * max(lambda_1, 0).
Index numerical_rank(const SymMatrix& m, std::optional<double> rtol = std::nullopt);

/// Projector onto the span of eigenvectors i..l (1-based, inclusive).
Projector spectral_projector(const EigenDecomp& e, Index i, Index l);

/// ||Q P||_2 (the sine of the largest principal angle when Q = I - P').
double projector_overlap(const Projector& q, const Projector& p);

/// Largest singular value of an arbitrary dense matrix.
double spectral_norm(const Matrix& m);

}  // namespace dircov
