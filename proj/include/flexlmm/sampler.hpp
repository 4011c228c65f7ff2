#pragma once

#include "flexlmm/model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flexlmm {

struct SamplerConfig
{
  std::size_t burn_in = 7500;
  std::size_t thin = 10;
  std::size_t keep = 1000;
  std::size_t adapt_batch = 50;
  double target_accept = 0.44;
  std::uint64_t seed = 1;
  //! Sample even when the propriety checks do not certify the posterior.
  bool override_propriety = false;

  std::size_t total_iterations() const noexcept { return burn_in + thin * keep; }
};

//! Coordinate in which a scalar is moved by the random walk.
struct SlotTransform
{
  enum class Kind
  {
    Identity,
    LogAbove, //!< x = lo + exp(z)
    LogBelow, //!< x = hi - exp(z)
    Tanh      //!< x = mid + half * tanh(z)
  };
  Kind kind = Kind::Identity;
  double lo = 0.0;
  double hi = 0.0;

  static SlotTransform for_support(const Support& s);
  double to_z(double x) const;
  double to_x(double z) const;
  //! log |dx/dz|
  double log_jacobian(double z) const;
};

struct PosteriorSample
{
  std::vector<std::string> names; //!< free scalar slots, then u[0..qr-1]
  Eigen::MatrixXd draws;          //!< one row per retained draw
  ParameterVector initial;
  ParameterVector final_state;
  std::vector<std::string> blocks;          //!< proposal blocks: scalar slots, then "u_block[i]"
  std::vector<double> log_scales_burn_in;   //!< proposal log-scales when burn-in ended
  std::vector<double> log_scales_final;     //!< proposal log-scales at the last iteration
  std::vector<double> acceptance;           //!< per block, after burn-in (whole run if no retained phase)
  SamplerConfig config;
  std::size_t floored_terms = 0;            //!< censored terms clamped at the probability floor

  std::size_t size() const noexcept { return std::size_t(draws.rows()); }
  //! Column index of a parameter; throws ParameterAbsent.
  std::size_t index_of(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  //! Parameter vector at retained draw s (fixed values from the final state).
  ParameterVector draw(std::size_t s) const;
};

//! Starting point: least squares for beta (censored rows imputed),
//! residual MAD for sigma_eps, neutral shapes, u = 0.
ParameterVector initialize(const ModelSpec& spec, Rng& rng);

//! Adaptive Metropolis-within-Gibbs. Refuses (ProprietyRefused) unless the
//! propriety checks pass or the config overrides them.
PosteriorSample run_chain(const ModelSpec& spec, const SamplerConfig& config);

struct ParameterSummary
{
  std::string name;
  double median = 0.0;
  double lower = 0.0; //!< 2.5% quantile
  double upper = 0.0; //!< 97.5% quantile
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
};

struct ChainDiagnostics
{
  std::vector<ParameterSummary> parameters;
  std::vector<std::pair<std::string, double>> acceptance;
};

//! Type-7 quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double p);

//! Effective sample size by Geyer's initial positive sequence.
double effective_sample_size(std::span<const double> chain);

ChainDiagnostics diagnostics(const PosteriorSample& sample);

} // namespace flexlmm
