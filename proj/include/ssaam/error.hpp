#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssaam {

enum class ErrorCode {
  // input / configuration
  MissingFile,
  ParseError,
  NoParseableRows,
  DuplicateDate,
  IntradayDate,
  EmptyTable,
  EmptyIntersection,
  TooFewScores,
  NonFiniteInput,
  InvalidArgument,
  InvalidConfig,
  UnknownStrategy,
  UnknownVariable,
  // estimation
  InsufficientSamples,
  SingularRegressors,
  InvalidLag,
  RankDeficient,
  NoConvergence,
  DegenerateUnmixing,
  InfeasibleBreakpoints,
  Infeasible,
  SolverFailure,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries a stable code; the message
/// starts with the code name so that CLI output is greppable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ssaam
