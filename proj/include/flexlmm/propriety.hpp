#pragma once

#include "flexlmm/lp.hpp"
#include "flexlmm/model.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace flexlmm {

enum class Verdict
{
  Pass,
  Fail,
  Indeterminate,
  NotApplicable
};

enum class Overall
{
  Proper,
  NotGuaranteed,
  Improper
};

const char* to_string(Verdict v) noexcept;
const char* to_string(Overall o) noexcept;

struct ConditionResult
{
  Verdict verdict = Verdict::NotApplicable;
  double value = 0.0; //!< rank, residual norm, integral, ... (see detail)
  std::string detail;
};

//! Which sufficient-condition set was applied.
enum class ProprietyRoute
{
  AllExact,          //!< rank, moment, column-space conditions on all rows
  UncensoredSubset,  //!< the same conditions on the uncensored rows
  IntervalCensored,  //!< LP disjointness of the censoring box and column space
  None               //!< no sufficient condition applies to this censoring pattern
};

const char* to_string(ProprietyRoute r) noexcept;

struct ProprietyReport
{
  ProprietyRoute route = ProprietyRoute::None;
  ConditionResult cond_a;       //!< rank(X:Z) < n
  ConditionResult cond_b;       //!< b >= 0
  ConditionResult cond_c;       //!< mixing moment E[tau^{-b/2}] finite under the shape prior
  ConditionResult cond_d;       //!< y outside the column space of (X:Z)
  ConditionResult cond_d_prime; //!< censoring box disjoint from the column space
  ConditionResult cond_e;       //!< skewness moment of max(a, b)^b finite
  ConditionResult priors;       //!< proper priors integrate to one
  LpStatus lp_status = LpStatus::DegenerateCycle;
  Overall overall = Overall::NotGuaranteed;
  std::vector<std::string> notes;

  //! First failing or indeterminate condition, formatted for messages.
  std::string reason() const;
};

ConditionResult check_rank_condition(const DesignData& data);
ConditionResult check_rank_condition(const Eigen::MatrixXd& joint);

//! Residual of the least-squares fit of y on (X:Z); passes iff > 1e-8 |y|.
ConditionResult check_column_space(const DesignData& data, const Eigen::VectorXd& y);
ConditionResult check_column_space(const Eigen::MatrixXd& joint, const Eigen::VectorXd& y);

//! Integral of E[tau^{-b/2} | delta] against the shape prior.
//! Throws SupportViolation when the prior puts mass at delta <= b for mixings
//! whose moment needs delta > b.
ConditionResult check_mixing_moment(const MixingDistribution& mixing, double b, const ProperPrior& delta_prior);

//! Integral of max(a(g), b(g))^b against the skewness prior.
ConditionResult check_skewness_condition(SkewParameterisation parameterisation, double b, const ProperPrior& gamma_prior);

//! Mass of every non-degenerate proper prior in the prior set.
ConditionResult check_prior_mass(const PriorSpec& prior);

ProprietyReport check_all(const ModelSpec& spec);

} // namespace flexlmm
