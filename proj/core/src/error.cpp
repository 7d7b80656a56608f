#include "volgram/error.hpp"

namespace volgram {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::TooManyMalformed: return "TooManyMalformed";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AllWindowsFiltered: return "AllWindowsFiltered";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::AllBinsUnderpopulated: return "AllBinsUnderpopulated";
    case ErrorCode::MeanBinUnpopulated: return "MeanBinUnpopulated";
    case ErrorCode::NoConvergedFits: return "NoConvergedFits";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InsufficientTauPoints: return "InsufficientTauPoints";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DomainError:
    case ErrorCode::NonConvergence:
    case ErrorCode::NoConvergedFits:
      return ErrorCategory::Numerical;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InsufficientTauPoints:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace volgram
