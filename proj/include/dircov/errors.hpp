// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dircov {

/// Caller supplied something outside an operation's domain: wrong shape,
/// non-finite entries, index out of range, out-of-range parameter.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures that depend on the numerical content of the data.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPsdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankCollapseError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Data carries no usable variation (e.g. constant responses).
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// ACLS fit in which no level set passes the admission filters.
class EmptyModelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dircov
