#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flexctl {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonSymmetric,
  NotPositiveDefinite,
  NonProportionalDamping,
  EigSolveFailure,
  RankDeficient,
  OutOfWorkspace,
  SingularDiscardedBlock,
  NonFinite,
  NotDetectable,
  IllConditioned,
  LengthMismatch,
  RankDeficientActuation,
  AboveNyquist,
  InfeasibleLimits,
  NonFiniteState,
  TsMismatch,
  WindowTooLong,
  TooShort,
  EmptyBand,
  IllPosed,
  Unstable,
  InfeasibleConstraints,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception; the code
// identifies the failing contract, the message carries the context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace flexctl
