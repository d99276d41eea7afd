// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dircov/matops.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace dircov {

/// N x D feature matrix (one sample per row) with an optional response vector.
class Dataset {
 public:
  explicit Dataset(Matrix x);
  Dataset(Matrix x, Vector y);

  Index n() const { return x_.rows(); }
  Index dim() const { return x_.cols(); }
  const Matrix& x() const { return x_; }
  bool has_y() const { return y_.has_value(); }
  /// Throws InputError when no responses are attached.
  const Vector& y() const;

  Dataset with_y(Vector y) const;
  Dataset rows(const std::vector<Index>& idx) const;

 private:
  Matrix x_;
  std::optional<Vector> y_;
};

struct OlsFit {
  double intercept = 0.0;
  Vector coefficients;
  /// coefficients / ||coefficients||, absent when the coefficients vanish.
  std::optional<Vector> direction;
};

/// Column means, accumulated as deviations from the first row so that
/// identical rows give their common value exactly.
Vector sample_mean(const Dataset& data);

/// N^{-1} sum (X_i - mu)(X_i - mu)^T. Divisor is N, not N - 1.
SymMatrix sample_covariance(const Dataset& data);

/// N^{-1} sum X_i X_i^T, the covariance estimate for a known zero mean.
SymMatrix second_moment(const Dataset& data);

SymMatrix sample_precision(const Dataset& data, std::optional<double> rtol = std::nullopt);

/// N^{-1} sum (X_i - mu_X)(Y_i - mu_Y).
Vector cross_covariance(const Dataset& data);

/// Minimal-norm least squares: intercept = mean(y), b = pinv(Sigma_hat) r_hat.
OlsFit ols_fit(const Dataset& data, std::optional<double> rtol = std::nullopt);

/// CSV with header x1,...,xD[,y]; decimal floats; LF line endings.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace dircov
