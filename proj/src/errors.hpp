#pragma once

#include <stdexcept>
#include <string>

namespace hkcs {

enum class ErrorKind {
  Config,
  Schema,
  Hypothesis,
  InvalidMatrix,
  DepthUndefined,
  HorizonExceeded,
  PeViolation,
  NonPositiveFloor,
  DegenerateContraction,
  OutOfRange,
  Format,
  NonPositiveValue,
  Io,
};

const char* to_string(ErrorKind kind);

// Process exit code attached to each error kind: 2 for configuration and
// hypothesis problems, 3 for runtime failures, 4 for degenerate constants.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Schema problems carry the dotted path of the offending field.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(ErrorKind::Schema, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class PeViolationError : public Error {
 public:
  PeViolationError(int i, int j, double window_start, double margin, const std::string& message)
      : Error(ErrorKind::PeViolation, message),
        i_(i), j_(j), window_start_(window_start), margin_(margin) {}

  int i() const noexcept { return i_; }
  int j() const noexcept { return j_; }
  double window_start() const noexcept { return window_start_; }
  double margin() const noexcept { return margin_; }

 private:
  int i_;
  int j_;
  double window_start_;
  double margin_;
};

}  // namespace hkcs
