#include "ssaam/error.hpp"

namespace ssaam {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NoParseableRows: return "NoParseableRows";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::IntradayDate: return "IntradayDate";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::TooFewScores: return "TooFewScores";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownStrategy: return "UnknownStrategy";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::SingularRegressors: return "SingularRegressors";
    case ErrorCode::InvalidLag: return "InvalidLag";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateUnmixing: return "DegenerateUnmixing";
    case ErrorCode::InfeasibleBreakpoints: return "InfeasibleBreakpoints";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::SolverFailure: return "SolverFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code) {}

}  // namespace ssaam
