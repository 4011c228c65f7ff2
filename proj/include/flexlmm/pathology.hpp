#pragma once

#include "flexlmm/model.hpp"

#include <Eigen/Core>

#include <vector>

namespace flexlmm {

//! A mixing family for the residuals together with the prior on its shape.
struct MixerChoice
{
  MixingKind kind = MixingKind::Gamma;
  ProperPrior delta_prior = ProperPrior::point_mass(6.0);
};

//! Tiny random-intercept model y = 1 beta + Z u + eps with u ~ N(0, re_sigma^2),
//! flat prior on beta and pi(sigma) proportional to sigma^-(b+1).
struct PathologyInput
{
  DesignData design; //!< n <= 4, p = 1, q = 1, r <= 2
  std::vector<Eigen::VectorXd> datasets;
  double re_sigma = 1.0;
  double b = 1.0;
  MixerChoice first;
  MixerChoice second;
  std::size_t nodes = 12; //!< Gauss rule size per mixing variable in the per-observation model
};

//! Two subjects with two repeats each, two datasets (one with an outlier),
//! b = 1 and Gamma mixing with delta fixed at 6 and at 12.
PathologyInput default_pathology_input();

struct PathologyDataset
{
  Eigen::VectorXd y;
  double normal_marginal = 0.0;    //!< m(y): tau fixed at 1
  double single_first = 0.0;       //!< single shared mixer, first choice
  double single_second = 0.0;
  double factorisation_error = 0.0; //!< max relative |m~(y) - m(y) * factor| over both choices
  double bf_single = 0.0;           //!< single_first / single_second
  double per_obs_first = 0.0;       //!< one mixer per observation
  double per_obs_second = 0.0;
  double bf_per_observation = 0.0;
};

struct PathologyReport
{
  double b = 0.0;
  double factor_first = 0.0;  //!< prior-only factor: E[tau^{-b/2}] averaged over the shape prior
  double factor_second = 0.0;
  double bf_prior_only = 0.0; //!< factor_first / factor_second
  std::vector<PathologyDataset> datasets;

  //! Largest relative spread of the single-mixer Bayes factor across datasets.
  double single_bf_spread() const;
  //! Largest relative spread of the per-observation Bayes factor across datasets.
  double per_observation_bf_spread() const;
};

//! Marginal likelihoods of the tiny model by nested quadrature, for a single
//! mixing variable shared by all errors and for one mixing variable per error.
PathologyReport demo_single_mixer_factorisation(const PathologyInput& input);

//! Nodes and weights of an n-point Gauss rule for a three-term recurrence
//! with diagonal `a`, off-diagonal `b` and total weight `mu0` (Golub-Welsch).
void golub_welsch(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double mu0, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights);

} // namespace flexlmm
