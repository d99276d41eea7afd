// SPDX-License-Identifier: Apache-2.0
#include "dircov/directional.hpp"

#include "dircov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dircov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sandwich_norm(const Matrix& a, const Matrix& b, const Matrix& delta) {
  if (a.cols() != delta.rows() || b.cols() != delta.rows()) {
    throw InputError("directional error: A and B must have D columns");
  }
  return spectral_norm(a * delta * b.transpose());
}

}  // namespace

double directional_cov_error(const Matrix& a, const Matrix& b, const SymMatrix& shat,
                             const SymMatrix& s) {
  if (shat.dim() != s.dim()) throw InputError("directional_cov_error: dimension mismatch");
  return sandwich_norm(a, b, shat.matrix() - s.matrix());
}

double directional_prec_error(const Matrix& a, const Matrix& b, const SymMatrix& shat_dagger,
                              const SymMatrix& s_dagger) {
  if (shat_dagger.dim() != s_dagger.dim()) {
    throw InputError("directional_prec_error: dimension mismatch");
  }
  return sandwich_norm(a, b, shat_dagger.matrix() - s_dagger.matrix());
}

GapReport eigengap(const Vector& spec_true, const Vector& spec_hat, Index i, Index l, Index rank) {
  const Index d = spec_true.size();
  if (spec_hat.size() != d) throw InputError("eigengap: spectra differ in length");
  if (i < 1 || l < i || l > d) throw InputError("eigengap: need 1 <= i <= l <= D");
  if (rank < 0 || rank > d) throw InputError("eigengap: rank out of range");

  // 1-based accessors with the boundary conventions.
  auto hat = [&](Index k) {
    if (k < 1) return kInf;
    if (k > d) return -kInf;
    return spec_hat(k - 1);
  };
  auto pop = [&](Index k) {
    if (k < 1) return kInf;
    if (k > rank) return 0.0;
    return spec_true(k - 1);
  };

  const double top = spec_true(i - 1);
  const double bottom = spec_true(l - 1);
  double below = kInf;
  if (l < d) below = std::max(0.0, bottom - hat(l + 1));
  double above = kInf;
  if (i > 1) above = std::max(0.0, hat(i - 1) - top);

  GapReport g;
  g.i = i;
  g.l = l;
  g.delta_sample = std::min(below, above);
  g.delta_population = std::max(0.0, std::min(pop(i - 1) - pop(i), pop(l) - pop(l + 1)));
  return g;
}

DkDiagnostic davis_kahan_check(const SymMatrix& s, const SymMatrix& shat, Index i, Index l) {
  if (s.dim() != shat.dim()) throw InputError("davis_kahan_check: dimension mismatch");
  const Projector p = spectral_projector(s.eigen(), i, l);
  const Projector q = spectral_projector(shat.eigen(), i, l).complement();
  const GapReport gap =
      eigengap(s.eigen().eigenvalues, shat.eigen().eigenvalues, i, l, numerical_rank(s));

  DkDiagnostic dk;
  dk.lhs = projector_overlap(q, p);
  dk.delta = gap.delta_sample;
  // Computed eigenvalues are only resolved to about D * eps * ||.||; a smaller
  // gap cannot be told apart from zero.
  const double resolution = default_rtol(s.dim()) *
                            std::max(std::abs(s.eigen().eigenvalues(0)), std::abs(shat.eigen().eigenvalues(0)));
  dk.valid = gap.delta_sample > resolution;
  if (!dk.valid) {
    dk.rhs = kInf;
  } else if (std::isinf(gap.delta_sample)) {
    dk.rhs = 0.0;
  } else {
    const double num = spectral_norm((s.matrix() - shat.matrix()) * p.matrix());
    dk.rhs = std::numbers::pi / 2.0 * num / gap.delta_sample;
  }
  return dk;
}

double relative_eigenvalue_error(const SymMatrix& s, const SymMatrix& shat,
                                 std::optional<double> rtol) {
  if (s.dim() != shat.dim()) throw InputError("relative_eigenvalue_error: dimension mismatch");
  const Index d = numerical_rank(s, rtol);
  if (d == 0) throw RankCollapseError("relative_eigenvalue_error: Sigma has rank 0");
  if (numerical_rank(shat, rtol) < d) {
    throw RankCollapseError("relative_eigenvalue_error: rank(Sigma_hat) < rank(Sigma)");
  }
  const double lam = s.eigen().eigenvalues(d - 1);
  const double lam_hat = shat.eigen().eigenvalues(d - 1);
  return std::abs(lam / lam_hat - 1.0);
}

double whitened_perturbation(const SymMatrix& s, const SymMatrix& shat,
                             std::optional<double> rtol) {
  if (s.dim() != shat.dim()) throw InputError("whitened_perturbation: dimension mismatch");
  const Matrix root = psd_sqrt(pinv_psd(s, rtol)).matrix();
  const SymMatrix w(root * (s.matrix() - shat.matrix()) * root);
  const Vector& ev = w.eigen().eigenvalues;
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double gaussian_psi2_proxy(const Matrix& a, const SymMatrix& s) {
  if (a.cols() != s.dim()) throw InputError("gaussian_psi2_proxy: A must have D columns");
  if (a.rows() == 0) return 0.0;
  const SymMatrix v(a * s.matrix() * a.transpose());
  return std::sqrt(kGaussianPsi2Sq * std::max(v.eigen().eigenvalues(0), 0.0));
}

double kappa_proxy(const Projector& p, const SymMatrix& s, std::optional<double> rtol) {
  if (p.dim() != s.dim()) throw InputError("kappa_proxy: dimension mismatch");
  const Matrix& pm = p.matrix();
  const double inv_part = spectral_norm(pm * pinv_psd(s, rtol).matrix() * pm);
  const double fwd_part = spectral_norm(pm * s.matrix() * pm);
  return kGaussianPsi2Sq * kGaussianPsi2Sq * inv_part * fwd_part;
}

}  // namespace dircov
