#pragma once

#include <stdexcept>
#include <string>

namespace chdf {

enum class ErrorKind {
  MeanNotZero,
  OutOfDomain,
  NonConvergence,
  StepTooLarge,
  NewtonDivergence,
  BoundViolation,
  PicardStall,
  ParseError,
  ValidationError,
  UnknownPreset,
  SnapshotFormatError,
  IoError,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by config validation; key() names the offending entry.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(ErrorKind::ValidationError, what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MeanNotZero: return "MeanNotZero";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::BoundViolation: return "BoundViolation";
    case ErrorKind::PicardStall: return "PicardStall";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::SnapshotFormatError: return "SnapshotFormatError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace chdf
