#pragma once

#include <stdexcept>
#include <string>

namespace leo {

// Every failure the library reports derives from Error so callers (the CLI in
// particular) can catch one type and still tell the categories apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, invalid hyperparameters, off-grid values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A forward or backward pass produced NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The caller broke an operation's precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  NormalizationError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

/// Model file could not be decoded (magic, version, checksum, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace leo
