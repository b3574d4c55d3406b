#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace nnreach {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Missing, unreadable or malformed artifact on disk.
class IoError : public Error {
public:
  using Error::Error;
};

/// Numerical failure. Carries the step, epoch or sample index where it was
/// detected, when one exists (CLI exit code 3).
class NumericError : public Error {
public:
  explicit NumericError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : Error(index ? what + " (index " + std::to_string(*index) + ")" : what), index_(index) {}

  std::optional<std::size_t> index() const { return index_; }

private:
  std::optional<std::size_t> index_;
};

/// Every singular value of the stacked snapshot matrix fell below the
/// truncation threshold.
class DegenerateWindowError : public NumericError {
public:
  using NumericError::NumericError;
};

/// The state matrix of a lift cannot be inverted to working precision.
class IllConditionedLiftError : public NumericError {
public:
  IllConditionedLiftError(const std::string& what, std::optional<std::size_t> step, double condition)
      : NumericError(what, step), condition_(condition) {}

  double condition() const { return condition_; }

private:
  double condition_;
};

/// A set with a zero-width face was passed where a full-dimensional one is required.
class DegenerateSetError : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace nnreach
