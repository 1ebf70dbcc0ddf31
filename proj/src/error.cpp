#include "hbgeo/error.hpp"

namespace hbgeo {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::Schema: return "SCHEMA_ERROR";
    case ErrorCode::Value: return "VALUE_ERROR";
    case ErrorCode::Integrity: return "INTEGRITY_ERROR";
    case ErrorCode::DegenerateTransform: return "DEGENERATE_TRANSFORM";
    case ErrorCode::Rank: return "RANK_ERROR";
    case ErrorCode::Factorization: return "FACTORIZATION_ERROR";
    case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
    case ErrorCode::Design: return "DESIGN_ERROR";
    case ErrorCode::Diagnostics: return "DIAGNOSTICS_ERROR";
    case ErrorCode::Validation: return "VALIDATION_ERROR";
    case ErrorCode::Config: return "CONFIG_ERROR";
  }
  return "UNKNOWN_ERROR";
}

}  // namespace hbgeo
