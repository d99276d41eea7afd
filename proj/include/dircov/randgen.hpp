// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dircov/estimators.hpp"
#include "dircov/matops.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace dircov {

/// Identifies one independent random sequence. Equal (master_seed,
/// stream_index) pairs produce identical sequences on every platform.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Portable generator for one stream.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq with the four
/// 32-bit halves of (master_seed, stream_index); both are fully specified by
/// the standard. Uniform variates take the top 53 bits of one engine output.
/// Normal variates use the Box-Muller transform, consuming two uniforms per
/// pair and returning the cosine branch first. The standard library
/// distributions are implementation-defined and are not used.
class Rng {
 public:
  explicit Rng(RngStream stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double normal();

  const RngStream& stream() const { return stream_; }

 private:
  RngStream stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class CovLabel { setting1, setting2, identity, custom };

std::string_view to_string(CovLabel label);

struct CovModel {
  CovLabel label = CovLabel::custom;
  Index dim = 0;
  double nu = 0.0;
  SymMatrix matrix;
};

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the columns of Q rescaled by sign(R_kk).
Matrix haar_orthogonal(Index dim, Rng& rng);

/// U diag(1,1,1,1,1,nu,nu,nu,nu,nu) U^T with U Haar on O(10).
CovModel make_sigma_setting1(double nu, Rng& rng);

/// AR(1) correlation matrix, entries nu^|i-j|.
CovModel make_sigma_setting2(double nu, Index dim);

CovModel make_sigma_identity(Index dim);

CovModel make_sigma_custom(const SymMatrix& sigma);

/// N rows x_i = sqrt(Sigma) g_i. Gaussian draws fill the N x D matrix of g's
/// row by row.
Dataset sample_gaussian(const CovModel& model, Index n, Rng& rng);

/// N rows uniform on the closed unit ball: Gaussian direction times U^(1/D).
Dataset sample_ball_uniform(Index dim, Index n, Rng& rng);

/// V V^T for V the first `rank` columns of a Haar orthogonal matrix.
Projector random_orthoprojector(Index dim, Index rank, Rng& rng);

}  // namespace dircov
