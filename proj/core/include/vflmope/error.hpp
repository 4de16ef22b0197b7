// Copyright 2026 The vflmope Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vfl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or block dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a precondition that is not about user input (stale cache,
/// missing active block, subset outside the interesting combinations).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// User-supplied value is out of range or otherwise invalid.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent federation or head configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity reached a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Raised by the optimizer before any parameter is touched.
class NonFiniteGradientError : public NumericError {
 public:
  using NumericError::NumericError;
};

class EmptyFederationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedContributionError : public Error {
 public:
  using Error::Error;
};

/// Malformed embedding file or report. `offset()` is the byte (or line)
/// position at which parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace vfl
