#pragma once

#include "flexlmm/distributions.hpp"
#include "flexlmm/parameters.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flexlmm {

//! Open interval (lo, hi); either end may be infinite.
struct Support
{
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x > lo && x < hi; }
  bool bounded() const noexcept;
};

//! Default hyperparameter of the degrees-of-freedom prior 2k d / (d + k)^3.
inline constexpr double kDefaultDfHyper = 1.2;

//! Normalised log density of the df prior truncated to (lower, inf).
double df_prior_logpdf(double delta, double k = kDefaultDfHyper, double lower = 0.0);

//! A proper univariate prior with declared support.
class ProperPrior
{
public:
  enum class Kind
  {
    HalfCauchy,
    UniformWindow,
    DfPrior,
    SpearmanRho, //!< induced by a uniform prior on the Spearman correlation
    PointMass,   //!< fixes the parameter at a value
    Custom
  };

  static ProperPrior half_cauchy(double scale = 1.0);
  static ProperPrior uniform(double lo, double hi);
  static ProperPrior df_prior(double k = kDefaultDfHyper, double lower = 0.0);
  static ProperPrior spearman_rho();
  static ProperPrior point_mass(double value);
  //! `logpdf` must be a normalised log density on `support`.
  static ProperPrior custom(std::function<double(double)> logpdf, Support support, std::string label = "custom");

  //! Log density; -inf outside the support. For PointMass: 0 at the point, -inf elsewhere.
  double logpdf(double x) const;
  double sample(Rng& rng) const;

  Kind kind() const noexcept { return kind_; }
  Support support() const noexcept { return support_; }
  bool is_point_mass() const noexcept { return kind_ == Kind::PointMass; }
  double point() const noexcept { return a_; }
  double first() const noexcept { return a_; }
  double second() const noexcept { return b_; }

  //! Config-file syntax, e.g. "half_cauchy(1)"; Custom priors render as their label.
  std::string describe() const;

  //! Same prior with its support cut to (lower, hi), renormalised. Only the
  //! df prior and uniform windows support this; others throw InvalidPrior.
  ProperPrior truncated_below(double lower) const;

private:
  ProperPrior(Kind kind, double a, double b, Support support);

  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  Support support_;
  std::function<double(double)> custom_;
  std::string label_;
};

//! Parse "kind(args)" as written by describe().
ProperPrior parse_prior(const std::string& text);

//! Prior on fixed effects: flat (improper, bounded) or independent uniform windows.
struct BetaPrior
{
  bool flat = true;
  double lo = -100.0;
  double hi = 100.0;
};

//! Improper prior pi(beta) pi(delta_eps) pi(gamma_eps) pi(theta_u) / sigma_eps^(b+1).
struct PriorSpec
{
  double b = 0.0;
  BetaPrior beta;
  //! Known residual scale; sigma_eps is then not a free parameter.
  std::optional<double> sigma_eps_fixed;
  std::optional<ProperPrior> delta_eps;
  std::optional<ProperPrior> gamma_eps;
  //! Random-effects hyperpriors keyed by full slot name, e.g. "sigma[0]" or "rho".
  std::map<std::string, ProperPrior> hyper;
};

//! Log prior density up to the improper factor's normalisation.
//! Returns -inf when a parameter lies outside its prior support.
double log_prior(const PriorSpec& prior, const ParameterVector& params);

} // namespace flexlmm
