#pragma once

#include "flexlmm/model.hpp"
#include "flexlmm/sampler.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flexlmm {

//! Scenario ids: S1-I..S1-IV, S2-I, S2-II, C-I..C-IV.
const std::vector<std::string>& scenario_ids();
std::string scenario_description(const std::string& id);

struct GeneratedData
{
  std::string scenario;
  DesignData data;
  std::vector<Observation> observations;
  std::map<std::string, double> truth; //!< keyed by slot name
  double censored_fraction = 0.0;
};

//! One synthetic dataset. `subjects` = 0 uses the published r = 100.
GeneratedData generate(const std::string& scenario, std::uint64_t seed, std::size_t subjects = 0);

//! Models fitted to a scenario family:
//!   S1: "general" (t errors, TPN random effects) and "normal"
//!   S2: "m1".."m4" (N/N, t/N, N/t, t/t; zero random-effect location)
//!   C:  "tpn" (TPN errors and random effects) and "normal"
std::vector<std::string> default_models(const std::string& scenario);
ModelSpec make_model(const std::string& model, const GeneratedData& data);
//! Config-file text describing the same model (see parse_config).
std::string model_config_text(const std::string& model);

//! splitmix64 step; used to derive replicate and chain seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct StudyConfig
{
  std::size_t replicates = 20;
  std::size_t subjects = 20;
  SamplerConfig sampler{.burn_in = 2000, .thin = 10, .keep = 500};
  std::vector<std::string> models; //!< empty: default_models
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;
};

struct ModelFit
{
  std::string model;
  bool ok = false;
  std::string error;
  std::map<std::string, ParameterSummary> summaries; //!< scalar parameters only
  std::optional<double> odds_delta_gt_10;
  std::map<std::string, double> log_bayes_factors;   //!< "gamma[0]=0" etc.
  double lpml = 0.0;
};

struct ReplicateResult
{
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double censored_fraction = 0.0;
  std::vector<ModelFit> fits; //!< in model order
};

struct AggregateRow
{
  std::string model;
  std::string parameter;
  std::size_t count = 0;
  double median = 0.0;    //!< median of replicate medians
  double lo_quantile = 0.0; //!< (i) 2.5% quantile of replicate medians
  double hi_quantile = 0.0; //!< (i) 97.5% quantile of replicate medians
  double lo_endpoint = 0.0; //!< (ii) median of replicate 2.5% endpoints
  double hi_endpoint = 0.0; //!< (ii) median of replicate 97.5% endpoints
};

struct StudyResult
{
  std::string scenario;
  StudyConfig config;
  std::vector<std::string> models;
  std::vector<ReplicateResult> replicates;
  std::map<std::string, std::size_t> failures; //!< per model
  std::vector<AggregateRow> rows;
  std::map<std::string, double> median_odds;       //!< per model (all-above replicates removed)
  std::map<std::string, double> median_log_bf;     //!< "model:hypothesis"
  //! Replicates in which each model has the highest LPML.
  std::map<std::string, std::size_t> lpml_wins;
  double median_censored_fraction = 0.0;

  const AggregateRow* row(const std::string& model, const std::string& parameter) const;
};

//! Fit every model to every replicate and aggregate. Per-replicate failures
//! are recorded and excluded from the aggregates.
StudyResult run_study(const std::string& scenario, const StudyConfig& config);

std::string study_table_text(const StudyResult& study);
std::string study_table_csv(const StudyResult& study);

} // namespace flexlmm
