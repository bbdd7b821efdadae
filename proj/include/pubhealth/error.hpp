#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pubhealth {

enum class ErrorCode {
  InvalidArgument,
  DegenerateInput,
  InvalidInput,
  MissingInput,
  SchemaMismatch,
  BackendError,
  ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-readable code so the
// CLI can emit a structured error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pubhealth
