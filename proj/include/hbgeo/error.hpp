#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hbgeo {

/// Failure categories shared by the library and the CLI exit-code mapping.
enum class ErrorCode {
  Io,
  Schema,
  Value,
  Integrity,
  DegenerateTransform,
  Rank,
  Factorization,
  InsufficientData,
  Design,
  Diagnostics,
  Validation,
  Config,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hbgeo
