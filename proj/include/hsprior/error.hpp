#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hsprior {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array or cube extents that do not fit together. `dimension()` names the
/// offending axis or field (e.g. "input channels", "kernel height").
class ShapeError : public Error {
 public:
  ShapeError(std::string dimension, const std::string& message)
      : Error(dimension + ": " + message), dimension_(std::move(dimension)) {}

  const std::string& dimension() const noexcept { return dimension_; }

 private:
  std::string dimension_;
};

/// A NaN or infinity showed up where only finite values are allowed.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, flags or task description.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File container problems. `field()` names the header key or section at fault.
class FormatError : public Error {
 public:
  FormatError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace hsprior
