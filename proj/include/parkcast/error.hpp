#pragma once

#include <stdexcept>
#include <string>

namespace parkcast {

/// Base class for all parkcast errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Operand shapes are incompatible. Messages always carry both shapes.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Input data violates a documented precondition (bad coordinates,
/// duplicate keys, malformed files).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Time-series ingestion failed (irregular spacing, gap too long).
class IngestionError : public Error {
public:
  using Error::Error;
};

/// An API contract was violated by the caller.
class ContractError : public Error {
public:
  using Error::Error;
};

/// A numeric invariant broke (NaN/Inf where finite values are required).
class NumericError : public Error {
public:
  using Error::Error;
};

/// File I/O or serialization failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// Configuration file or key rejected.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Training diverged; carries the epoch at which it happened.
class TrainingError : public Error {
public:
  TrainingError(const std::string &msg, int epoch)
      : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

} // namespace parkcast
