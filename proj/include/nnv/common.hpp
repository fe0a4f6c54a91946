#pragma once

#include <stdexcept>
#include <string>

namespace nnv {

/// Error category carried by every exception thrown from this library.
enum class ErrorKind {
  kInvalidInput,
  kDimensionMismatch,
  kInvalidSector,
  kRankDeficient,
  kUnsupported,
  kIo,
  kNumerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kInvalidSector: return "invalid-sector";
    case ErrorKind::kRankDeficient: return "rank-deficient";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNumerical: return "numerical";
  }
  return "unknown";
}

}  // namespace nnv
