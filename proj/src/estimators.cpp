// SPDX-License-Identifier: Apache-2.0
#include "dircov/estimators.hpp"

#include "dircov/errors.hpp"

namespace dircov {

namespace {

double mean_of(const Vector& v) {
  const double pivot = v(0);
  return pivot + (v.array() - pivot).sum() / static_cast<double>(v.size());
}

Matrix centered(const Dataset& data) {
  return data.x().rowwise() - sample_mean(data).transpose();
}

}  // namespace

Dataset::Dataset(Matrix x) : x_(std::move(x)) {
  if (x_.rows() < 1 || x_.cols() < 1) throw InputError("Dataset requires N >= 1 and D >= 1");
  if (!x_.allFinite()) throw InputError("Dataset features must be finite");
}

Dataset::Dataset(Matrix x, Vector y) : Dataset(std::move(x)) {
  if (y.size() != x_.rows()) throw InputError("Dataset response length must equal N");
  if (!y.allFinite()) throw InputError("Dataset responses must be finite");
  y_ = std::move(y);
}

const Vector& Dataset::y() const {
  if (!y_) throw InputError("Dataset has no responses");
  return *y_;
}

Dataset Dataset::with_y(Vector y) const { return Dataset(x_, std::move(y)); }

Dataset Dataset::rows(const std::vector<Index>& idx) const {
  if (idx.empty()) throw InputError("Dataset::rows: empty selection");
  for (Index i : idx) {
    if (i < 0 || i >= n()) throw InputError("Dataset::rows: index out of range");
  }
  Matrix x(static_cast<Index>(idx.size()), dim());
  Vector y(y_ ? static_cast<Index>(idx.size()) : 0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    x.row(static_cast<Index>(k)) = x_.row(idx[k]);
    if (y_) y(static_cast<Index>(k)) = (*y_)(idx[k]);
  }
  return y_ ? Dataset(std::move(x), std::move(y)) : Dataset(std::move(x));
}

Vector sample_mean(const Dataset& data) {
  const Matrix& x = data.x();
  const Vector pivot = x.row(0).transpose();
  const Vector shift = (x.rowwise() - pivot.transpose()).colwise().sum().transpose();
  return pivot + shift / static_cast<double>(data.n());
}

SymMatrix sample_covariance(const Dataset& data) {
  const Matrix c = centered(data);
  return SymMatrix(c.transpose() * c / static_cast<double>(data.n()));
}

SymMatrix second_moment(const Dataset& data) {
  return SymMatrix(data.x().transpose() * data.x() / static_cast<double>(data.n()));
}

SymMatrix sample_precision(const Dataset& data, std::optional<double> rtol) {
  return pinv_psd(sample_covariance(data), rtol);
}

Vector cross_covariance(const Dataset& data) {
  const Vector& y = data.y();
  const Vector ry = y.array() - mean_of(y);
  return centered(data).transpose() * ry / static_cast<double>(data.n());
}

OlsFit ols_fit(const Dataset& data, std::optional<double> rtol) {
  OlsFit fit;
  fit.intercept = mean_of(data.y());
  fit.coefficients = sample_precision(data, rtol).matrix() * cross_covariance(data);
  const double norm = fit.coefficients.norm();
  if (norm > 0.0) fit.direction = fit.coefficients / norm;
  return fit;
}

}  // namespace dircov
