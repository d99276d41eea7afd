// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dircov/matops.hpp"

#include <optional>

namespace dircov {

/// Sample and population separation of the eigenvalue block i..l.
struct GapReport {
  Index i = 1;
  Index l = 1;
  double delta_sample = 0.0;
  double delta_population = 0.0;
};

/// Both sides of the deterministic Davis-Kahan sin-theta bound
///   ||Q_il(Shat) P_il(S)||_2 <= (pi/2) ||(S - Shat) P_il(S)||_2 / delta_il.
/// `rhs` is +inf and `valid` false when delta_il == 0.
struct DkDiagnostic {
  double lhs = 0.0;
  double rhs = 0.0;
  double delta = 0.0;
  bool valid = false;
};

/// ||A (Shat - S) B^T||_2 for A (d1 x D) and B (d2 x D).
double directional_cov_error(const Matrix& a, const Matrix& b, const SymMatrix& shat,
                             const SymMatrix& s);

/// ||A (Shat^+ - S^+) B^T||_2; takes the pseudoinverses directly.
double directional_prec_error(const Matrix& a, const Matrix& b, const SymMatrix& shat_dagger,
                              const SymMatrix& s_dagger);

/// spec_true and spec_hat are descending spectra of S and Shat; indices are
/// 1-based. delta_sample is the distance from [lambda_l(S), lambda_i(S)] to
/// (-inf, lambda_{l+1}(Shat)] u [lambda_{i-1}(Shat), inf), where
/// lambda_0(Shat) = inf and lambda_{D+1}(Shat) = -inf make the corresponding
/// piece empty. delta_population is
/// (lambda_{i-1} - lambda_i) ^ (lambda_l - lambda_{l+1}) of S, using
/// lambda_0 = inf and lambda_k = 0 for k > rank.
GapReport eigengap(const Vector& spec_true, const Vector& spec_hat, Index i, Index l, Index rank);

/// valid requires delta above the eigenvalue resolution D * eps * max ||S||, ||Shat||.
DkDiagnostic davis_kahan_check(const SymMatrix& s, const SymMatrix& shat, Index i, Index l);

/// |lambda_d(S) / lambda_d(Shat) - 1| with d = rank(S) at rtol. Throws
/// RankCollapseError when lambda_d(Shat) <= rtol * lambda_1(Shat).
double relative_eigenvalue_error(const SymMatrix& s, const SymMatrix& shat,
                                 std::optional<double> rtol = std::nullopt);

/// ||sqrt(S^+) (S - Shat) sqrt(S^+)||_2. Values below 1 imply
/// ker(Shat) n Im(S) = {0}.
double whitened_perturbation(const SymMatrix& s, const SymMatrix& shat,
                             std::optional<double> rtol = std::nullopt);

/// Squared psi_2 norm of a standard normal scalar.
inline constexpr double kGaussianPsi2Sq = 8.0 / 3.0;

/// Gaussian closed form of ||A X||_psi2 for X ~ N(mu, S): sqrt(8/3 ||A S A^T||_2).
/// A proxy only; psi_2 norms of non-Gaussian data are not estimated.
double gaussian_psi2_proxy(const Matrix& a, const SymMatrix& s);

/// Gaussian proxy of kappa(P, X) = ||P S^+ X||^2_psi2 ||P X||^2_psi2, i.e.
/// (8/3)^2 ||P S^+ P||_2 ||P S P||_2.
double kappa_proxy(const Projector& p, const SymMatrix& s, std::optional<double> rtol = std::nullopt);

}  // namespace dircov
