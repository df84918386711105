#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opflow {

enum class ErrorCode {
  ShapeMismatch,
  NotHermitian,
  EigFailure,
  NotStrictlyPositive,
  NodesTooFew,
  NotSeparating,
  NotCommuting,
  NotNondegenerate,
  BranchAmbiguity,
  NotAGroup,
  ZeroFunctional,
  IllDefined,
  FamilyNotFaithful,
  NotInAlgebra,
  InvarianceViolation,
  IllConditioned,
  ParseError,
  ConfigInvalid,
  ToleranceExceeded,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
  switch (code) {
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::NotHermitian: return "NOT_HERMITIAN";
    case ErrorCode::EigFailure: return "EIG_FAILURE";
    case ErrorCode::NotStrictlyPositive: return "NOT_STRICTLY_POSITIVE";
    case ErrorCode::NodesTooFew: return "NODES_TOO_FEW";
    case ErrorCode::NotSeparating: return "NOT_SEPARATING";
    case ErrorCode::NotCommuting: return "NOT_COMMUTING";
    case ErrorCode::NotNondegenerate: return "NOT_NONDEGENERATE";
    case ErrorCode::BranchAmbiguity: return "BRANCH_AMBIGUITY";
    case ErrorCode::NotAGroup: return "NOT_A_GROUP";
    case ErrorCode::ZeroFunctional: return "ZERO_FUNCTIONAL";
    case ErrorCode::IllDefined: return "ILL_DEFINED";
    case ErrorCode::FamilyNotFaithful: return "FAMILY_NOT_FAITHFUL";
    case ErrorCode::NotInAlgebra: return "NOT_IN_ALGEBRA";
    case ErrorCode::InvarianceViolation: return "INVARIANCE_VIOLATION";
    case ErrorCode::IllConditioned: return "ILL_CONDITIONED";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::ToleranceExceeded: return "TOLERANCE_EXCEEDED";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-readable code; what() is "<CODE>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace opflow
