#include "quartercast/error.hpp"

namespace quartercast {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::calendar_underflow: return "calendar-underflow";
    case ErrorKind::zero_actual: return "zero-actual";
    case ErrorKind::empty_set: return "empty-set";
    case ErrorKind::zero_baseline: return "zero-baseline";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::zero_denominator: return "zero-denominator";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::nonconvergence: return "nonconvergence";
    case ErrorKind::schema_mismatch: return "schema-mismatch";
    case ErrorKind::duplicate: return "duplicate";
    case ErrorKind::contiguity: return "contiguity";
    case ErrorKind::missing_indicator: return "missing-indicator";
    case ErrorKind::unknown_geography: return "unknown-geography";
    case ErrorKind::empty_training_set: return "empty-training-set";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::insufficient_data:
    case ErrorKind::empty_training_set:
      return 3;
    case ErrorKind::nonconvergence:
      return 4;
    case ErrorKind::io:
      return 1;
    default:
      return 2;
  }
}

}  // namespace quartercast
