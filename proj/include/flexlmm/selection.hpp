#pragma once

#include "flexlmm/model.hpp"
#include "flexlmm/sampler.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace flexlmm {

//! Gaussian KDE with Silverman's bandwidth 0.9 min(sd, IQR/1.34) S^{-1/5}.
class GaussianKde
{
public:
  explicit GaussianKde(std::vector<double> points);

  double log_density(double x) const;
  double density(double x) const { return std::exp(log_density(x)); }
  double bandwidth() const noexcept { return h_; }
  std::size_t size() const noexcept { return pts_.size(); }

private:
  std::vector<double> pts_;
  double h_ = 1.0;
};

struct SavageDickey
{
  double bf = 0.0;     //!< may underflow to 0; log_bf stays finite
  double log_bf = 0.0;
  double log_posterior_density = 0.0;
  double log_prior_density = 0.0;
  double bandwidth = 0.0;
};

//! Posterior density of `name` at `point` (KDE of the draws) over the prior
//! density there. Bounded supports are smoothed on the atanh scale unless
//! `boundary_transform` is false, in which case the KDE runs on the natural scale.
SavageDickey savage_dickey(const PosteriorSample& sample, const std::string& name, double point,
                           const ProperPrior& prior, bool boundary_transform = true);

//! Same, taking the prior from the model. Refuses (InvalidPrior) unless the
//! parameter has its own proper, non-degenerate prior.
SavageDickey savage_dickey(const PosteriorSample& sample, const ModelSpec& spec, const std::string& name,
                           double point);

//! p / (1 - p) with p the fraction of draws of `name` above `threshold`;
//! +inf when every draw is above.
double tail_odds(const PosteriorSample& sample, double threshold = 10.0, const std::string& name = "delta_eps");

//! Median over replicates after dropping replicates whose odds are infinite
//! (every draw above the threshold). NaN when nothing is left.
double median_odds(std::vector<double> odds);

struct LpmlResult
{
  std::vector<double> log_cpo; //!< per subject
  double lpml = 0.0;
  std::size_t clamped = 0;              //!< draws clamped at max - 700 in the harmonic mean
  std::vector<std::size_t> overflowed;  //!< subjects with a non-finite log-likelihood at some draw
};

//! Harmonic-mean CPO per subject and their log sum.
LpmlResult lpml(const PosteriorSample& sample, const ModelSpec& spec);

//! Same from a draws x subjects matrix of subject log-likelihoods.
LpmlResult lpml_from_loglik(const Eigen::MatrixXd& subject_loglik);

struct SelectionReport
{
  std::map<std::string, SavageDickey> bayes_factors; //!< keyed "name=point"
  std::optional<double> odds_delta_gt_10;
  LpmlResult lpml;
  std::vector<std::string> flags;
};

struct Hypothesis
{
  std::string name;
  double point = 0.0;
};

//! Parse "gamma[0]=0".
Hypothesis parse_hypothesis(const std::string& text);

//! Every gamma-type slot with a proper prior tested at 0 (its symmetric value).
std::vector<Hypothesis> default_hypotheses(const ModelSpec& spec);

SelectionReport select(const PosteriorSample& sample, const ModelSpec& spec, const std::vector<Hypothesis>& hypotheses);

} // namespace flexlmm
