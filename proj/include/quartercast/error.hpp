#pragma once

#include <stdexcept>
#include <string>

namespace quartercast {

enum class ErrorKind {
  validation,
  calendar_underflow,
  zero_actual,
  empty_set,
  zero_baseline,
  out_of_range,
  zero_denominator,
  insufficient_data,
  nonconvergence,
  schema_mismatch,
  duplicate,
  contiguity,
  missing_indicator,
  unknown_geography,
  empty_training_set,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for every failure the library reports; callers
/// branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for an error kind: 2 validation, 3 insufficient data,
/// 4 nonconvergence, 1 for I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace quartercast
