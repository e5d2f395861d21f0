#pragma once

#include <stdexcept>
#include <string>

namespace hmnas {

enum class ErrorCode {
  invalid_argument,
  parse,
  validation,
  infeasible,
  missing_entry,
  io,
  oracle,
  unsupported,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::missing_entry: return "missing_entry";
    case ErrorCode::io: return "io";
    case ErrorCode::oracle: return "oracle";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace hmnas
