#pragma once

#include <stdexcept>
#include <string>

namespace causalpanel {

// Broad failure categories, mapped to CLI exit codes (config=2, data=3,
// estimation=4).
enum class ErrorCategory { config, data, estimation };

// Fine-grained error kinds surfaced by the library contracts.
enum class ErrorKind {
  invalid_config,
  file_unreadable,
  schema_mismatch,
  non_binary_treatment,
  non_binary_outcome,
  missing_value,
  duplicate_unit_id,
  empty_result,
  single_arm,
  dimension_mismatch,
  invalid_design,
  separation,
  singular,
  not_converged,
  no_crossing,
  estimator_failure,
  degenerate_distribution,
  zero_variance,
  non_positive_rr,
  invalid_risk,
  io_failure,
};

const char* to_string(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  ErrorCategory category() const { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace causalpanel
