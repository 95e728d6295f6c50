#pragma once

#include <stdexcept>
#include <string>

namespace gridshap {

/// Malformed or inconsistent input data: bad case files, violated network
/// invariants, CSV schema mismatches, corrupt model files.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Failed numerical computation: singular systems, rank-deficient regressions.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

/// Filesystem-level failure (open/read/write).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

}  // namespace gridshap
