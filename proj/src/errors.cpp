#include "errors.hpp"

namespace hkcs {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Hypothesis: return "HypothesisError";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::DepthUndefined: return "DepthUndefined";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::PeViolation: return "PeViolation";
    case ErrorKind::NonPositiveFloor: return "NonPositiveFloor";
    case ErrorKind::DegenerateContraction: return "DegenerateContraction";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::NonPositiveValue: return "NonPositiveValue";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Schema:
    case ErrorKind::Hypothesis:
    case ErrorKind::InvalidMatrix:
    case ErrorKind::PeViolation:
    case ErrorKind::NonPositiveFloor:
    case ErrorKind::DepthUndefined:
      return 2;
    case ErrorKind::DegenerateContraction:
      return 4;
    default:
      return 3;
  }
}

}  // namespace hkcs
