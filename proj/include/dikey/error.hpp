#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace dikey {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  NotHermitian,
  NoConvergence,
  NegativeEigenvalue,
  Normalization,
  InvariantViolation,
  NearZeroOverlap,
  PurificationMismatch,
  VertexCapExceeded,
  Parse,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::NotHermitian: return "not-hermitian";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::NegativeEigenvalue: return "negative-eigenvalue";
    case ErrorKind::Normalization: return "normalization";
    case ErrorKind::InvariantViolation: return "invariant-violation";
    case ErrorKind::NearZeroOverlap: return "near-zero-overlap";
    case ErrorKind::PurificationMismatch: return "purification-mismatch";
    case ErrorKind::VertexCapExceeded: return "vertex-cap-exceeded";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

/// %g-style rendering of a real for error messages.
inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dikey
