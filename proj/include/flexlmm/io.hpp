#pragma once

#include "flexlmm/model.hpp"
#include "flexlmm/propriety.hpp"
#include "flexlmm/sampler.hpp"
#include "flexlmm/selection.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace flexlmm {

inline constexpr const char* kVersion = "1.0.0";

//! Column contract of data files (comma separated, header required):
//!   subject  any token; remapped to 0..r-1 in order of first appearance
//!   censor   exact | right | left | interval
//!   y        response (exact rows)
//!   lower    lower bound (right and interval rows)
//!   upper    upper bound (left and interval rows)
//!   x_*      fixed-effect covariates, in column order
//!   z_*      random-effect covariates; absent means a random intercept
//! Unused cells may be empty or NA.
struct Dataset
{
  DesignData data;
  std::vector<Observation> observations;
  std::vector<std::string> subject_ids;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;
};

//! `survival_times`: values and bounds must be positive (MEAFT input).
Dataset read_dataset(std::istream& in, bool survival_times = false);
Dataset load_dataset(const std::string& path, bool survival_times = false);
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const std::string& path, const Dataset& ds);

//! Dataset view of generated or hand-built inputs (subjects named 1..r).
Dataset make_dataset(const DesignData& data, const std::vector<Observation>& observations);

//! Parsed model configuration. See README for the key reference.
struct RunConfig
{
  Mode mode = Mode::Longitudinal;
  std::optional<double> log_base;
  ErrorFamily error;
  RandomEffectsLaw random_effects;
  PriorSpec prior;
  SamplerConfig sampler;
  std::string text; //!< source text, echoed into manifests
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

ModelSpec build_model(const Dataset& ds, const RunConfig& config);

//! 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

//! One column per parameter, one row per retained draw, 17 significant digits.
std::string samples_csv(const PosteriorSample& sample);
//! Rebuild a sample from CSV; slots not in the file come from `base`.
PosteriorSample read_samples_csv(const std::string& text, const ParameterVector& base);

std::string propriety_text(const ProprietyReport& report);
std::string propriety_json(const ProprietyReport& report);
std::string diagnostics_text(const ChainDiagnostics& diag);
std::string selection_text(const SelectionReport& report);
std::string selection_json(const SelectionReport& report);

struct RunManifest
{
  std::string software = kVersion;
  std::string created;
  std::string data_path;
  std::string data_hash;
  std::string config_text;
  std::string spec_hash; //!< hash of data bytes and config text together
  SamplerConfig sampler;
  std::string verdict;
  std::string samples_file = "samples.csv";
  std::string samples_hash;
};

std::string manifest_json(const RunManifest& m);
RunManifest parse_manifest(const std::string& json_text);

} // namespace flexlmm
