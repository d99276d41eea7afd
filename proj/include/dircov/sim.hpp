// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dircov/estimators.hpp"
#include "dircov/randgen.hpp"

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace dircov {

enum class LinkKind { identity, logit, relu, tanh, shifted_abs, mixed };

struct LinkFn {
  LinkKind kind = LinkKind::identity;

  double operator()(double t) const;
  std::string_view name() const;

  /// Throws InputError for unknown names.
  static LinkFn parse(std::string_view name);
};

/// Y = f(a^T X) + zeta with zeta ~ N(0, sigma_zeta^2 Var f(a^T X)).
struct SimConfig {
  Vector a;
  LinkFn link;
  double sigma_zeta = 0.0;
  CovModel sigma;

  /// Index vector e_1 in R^D, X ~ N(0, I_D).
  static SimConfig standard(Index dim, LinkFn link, double sigma_zeta);
};

struct LevelSetPartition {
  int num_sets = 1;
  /// 0-based region of each sample; sample i lies in [r/J, (r+1)/J).
  std::vector<int> region;
  std::vector<Index> counts;

  double density(int r) const {
    return static_cast<double>(counts[static_cast<std::size_t>(r)]) /
           static_cast<double>(region.size());
  }
};

struct LocalFit {
  int level = 1;  ///< 1-based level-set index
  Index count = 0;
  double density = 0.0;
  OlsFit fit;
};

struct AclsModel {
  int num_sets = 1;
  double alpha = 0.0;
  SymMatrix outer = SymMatrix::zero(1);  ///< sum over active sets of rho b b^T
  double lambda1 = 0.0;
  Vector u1;
  std::vector<int> active;  ///< 1-based indices, ascending
  std::vector<LocalFit> fits;
};

struct JSelection {
  int j_star = 1;
  std::vector<std::pair<int, double>> trace;  ///< (J, lambda_1(M_J)), 0 for empty models
  std::optional<AclsModel> model;             ///< fit at j_star, absent if empty
};

Dataset generate_sim_data(const SimConfig& cfg, Index n, Rng& rng);

/// Var f(T), T ~ N(0, sigma_p^2). Exact for the identity link; otherwise a
/// 10^6-draw Monte-Carlo estimate at a fixed calibration stream, cached.
double calibrate_link_variance(LinkFn link, double sigma_p);

/// (y - min) / ((max - min)(1 + 2^-20)), a monotone map into [0, 1).
Vector rescale_responses(const Vector& y);

LevelSetPartition partition_level_sets(const Vector& y, int num_sets);

/// Averaged conditional least squares with J level sets. A level set is
/// active when its density exceeds alpha / J and it holds at least 2D
/// samples. Throws EmptyModelError when nothing is active.
AclsModel acls_fit(const Dataset& data, int num_sets, double alpha,
                   std::optional<double> rtol = std::nullopt);

/// Deduplicated ceil(1.5^k) for k = 0..k_max, truncated at `cap`.
std::vector<int> j_grid(int k_max, long long cap);

/// Last J in an ascending (J, lambda_1) trace whose score J * lambda_1
/// strictly exceeds the score of every earlier entry.
int j_star_from_trace(const std::vector<std::pair<int, double>>& trace);

/// Largest grid J whose score J * lambda_1(M_J) strictly beats every smaller
/// grid J'. The grid is capped at max(1, N / (2D)).
JSelection select_J(const Dataset& data, double alpha, int k_max,
                    std::optional<double> rtol = std::nullopt);

/// min over s in {-1, 1} of ||s u - a||_2.
double aligned_error(const Vector& u, const Vector& a);

}  // namespace dircov
