#include "flexlmm/error.hpp"

namespace flexlmm {

const char* to_string(ErrorCode code) noexcept
{
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficientX: return "RankDeficientX";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::GammaOutOfDomain: return "GammaOutOfDomain";
    case ErrorCode::CorrelationOutOfDomain: return "CorrelationOutOfDomain";
    case ErrorCode::MarginalCdfOverflow: return "MarginalCdfOverflow";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::DegenerateCycle: return "DegenerateCycle";
    case ErrorCode::ProprietyRefused: return "ProprietyRefused";
    case ErrorCode::NonFiniteLogJoint: return "NonFiniteLogJoint";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::PointOutsideSupport: return "PointOutsideSupport";
    case ErrorCode::TooFewDraws: return "TooFewDraws";
    case ErrorCode::ParameterAbsent: return "ParameterAbsent";
    case ErrorCode::InvalidPrior: return "InvalidPrior";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonPositiveSurvivalTime: return "NonPositiveSurvivalTime";
    case ErrorCode::UnorderedInterval: return "UnorderedInterval";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
  : std::runtime_error(std::string(to_string(code)) + ": " + what)
  , code_(code)
{}

void fail(ErrorCode code, const std::string& what)
{
  throw Error(code, what);
}

} // namespace flexlmm
