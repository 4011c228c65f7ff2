#pragma once

#include <stdexcept>
#include <string>

namespace flexlmm {

enum class ErrorCode {
  DimensionMismatch,
  RankDeficientX,
  EmptyData,
  NonPositiveSigma,
  NonPositiveDelta,
  QuadratureFailure,
  GammaOutOfDomain,
  CorrelationOutOfDomain,
  MarginalCdfOverflow,
  OutOfDomain,
  OutOfSupport,
  SupportViolation,
  DegenerateCycle,
  ProprietyRefused,
  NonFiniteLogJoint,
  EmptySample,
  PointOutsideSupport,
  TooFewDraws,
  ParameterAbsent,
  InvalidPrior,
  SchemaError,
  NonPositiveSurvivalTime,
  UnorderedInterval,
  InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

//! Exception carrying a machine-checkable error code.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

} // namespace flexlmm
