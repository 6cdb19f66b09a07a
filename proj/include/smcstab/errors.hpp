#ifndef SMCSTAB_ERRORS_HPP
#define SMCSTAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace smcstab {

enum class ErrorCode {
  invalid_argument,
  io,
  parse,
  config,
  dimension,
  model_violation,
  degeneracy,
  numeric,
  unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Weight sum collapsed to zero (every particle weight underflowed or the
// emission vanished on all particles). Carries the time index of the failing
// step; runs abort rather than resetting weights to uniform.
class DegeneracyError : public Error {
 public:
  DegeneracyError(std::string message, long long time_index)
      : Error(ErrorCode::degeneracy, std::move(message)), time_(time_index) {}

  long long time_index() const noexcept { return time_; }

 private:
  long long time_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::config: return "config";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::model_violation: return "model-violation";
    case ErrorCode::degeneracy: return "degeneracy";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::unsupported: return "unsupported";
  }
  return "unknown";
}

}  // namespace smcstab

#endif
