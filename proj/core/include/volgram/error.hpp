#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace volgram {

enum class ErrorCode {
  // input / data problems
  MissingColumn,
  TooManyMalformed,
  EmptyInput,
  AllWindowsFiltered,
  TooFewSamples,
  DegenerateSample,
  SeriesTooShort,
  AllBinsUnderpopulated,
  MeanBinUnpopulated,
  NoConvergedFits,
  FormatError,
  IoError,
  // numerical problems
  DomainError,
  NonConvergence,
  InsufficientTauPoints,
  InvalidArgument,
};

enum class ErrorCategory { Data, Numerical, Usage };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category(ErrorCode code) noexcept;

/// Exception type thrown by every volgram operation.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace volgram
