#pragma once

#include <stdexcept>
#include <string>

namespace cgc {

enum class ErrorKind {
  InvalidArgument,   // bad parameters, degenerate inputs
  Structural,        // malformed graph (asymmetry, bad indices, duplicates)
  SizeMismatch,      // file or matrix sizes inconsistent with declared shape
  VersionMismatch,   // on-disk format version not supported
  MaskOverlap,       // train/val/test index sets intersect
  DimensionMismatch, // incompatible operand shapes
  Data,              // unparsable or missing input data
  Numerical,         // factorization / convergence failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Structural: return "structural";
    case ErrorKind::SizeMismatch: return "size_mismatch";
    case ErrorKind::VersionMismatch: return "version_mismatch";
    case ErrorKind::MaskOverlap: return "mask_overlap";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

}  // namespace cgc
