#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdobs {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedAnalyticCase,
  ResolutionTooCoarse,
  InvalidM,
  NonPositiveCoefficient,
  GridMismatch,
  DimensionMismatch,
  NotHurwitz,
  NearSingular,
  PlacementImpossible,
  KappaOutOfRange,
  QInfeasible,
  InfeasibleAtZero,
  NoFeasibleQ,
  StepRejected,
  ScheduleHorizonMismatch,
  InvalidSpec,
  DecayedToFloor,
  InfeasibleReport,
  TailTooShort,
  ReactionOutOfRange,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and tests) can dispatch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdobs
