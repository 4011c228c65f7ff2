#pragma once

#include "flexlmm/model.hpp"

#include <Eigen/Core>

namespace flexlmm {

struct LogLikelihoodBreakdown
{
  Eigen::VectorXd per_observation; //!< log density (exact) or log probability (censored)
  Eigen::VectorXd per_subject;
  double total = 0.0;
  std::size_t floored = 0; //!< censored terms clamped at the probability floor
};

//! Contribution of one observation with linear predictor `eta` under residual law `err`.
double observation_loglik(const Observation& obs, double eta, const UnivariateLaw& err, bool* floored = nullptr);

LogLikelihoodBreakdown loglik(const ModelSpec& spec, const ParameterVector& params);

//! Random-effects log density of subject i's block.
double subject_random_effects_logpdf(const ModelSpec& spec, const ParameterVector& params, std::size_t subject);

//! Sum over subjects of the random-effects log density.
double random_effects_logpdf(const ModelSpec& spec, const ParameterVector& params);

//! loglik + random-effects density + log prior. -inf outside the prior support.
double log_joint(const ModelSpec& spec, const ParameterVector& params);

} // namespace flexlmm
