#pragma once

#include "flexlmm/distributions.hpp"
#include "flexlmm/parameters.hpp"
#include "flexlmm/priors.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace flexlmm {

//! Design of a linear mixed model y = X beta + Z u + eps.
struct DesignData
{
  Eigen::MatrixXd X;                //!< n x p fixed-effect covariates (p may be 0)
  Eigen::MatrixXd Z;                //!< n x (q r) random-effect covariates, subject blocks of q columns
  std::vector<std::size_t> subject; //!< 0-based subject of each row
  std::size_t q = 0;
  std::size_t r = 0;

  std::size_t n() const noexcept { return subject.size(); }
  std::size_t p() const noexcept { return std::size_t(X.cols()); }
  //! Repeat count of each subject.
  std::vector<std::size_t> n_i() const;
};

enum class CensorKind
{
  Exact,
  Interval, //!< lower < Y < upper
  Right,    //!< Y > lower
  Left      //!< Y < upper
};

const char* to_string(CensorKind kind) noexcept;

struct Observation
{
  double value = 0.0; //!< response, ignored unless Exact
  CensorKind censor = CensorKind::Exact;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t row = 0;
};

//! Residual law: scale mixture of normals, optionally two-piece.
//! Shape and skewness values live in the ParameterVector.
struct ErrorFamily
{
  MixingKind mixing = MixingKind::PointMass;
  std::optional<SkewParameterisation> skew;

  bool has_delta() const noexcept { return mixing != MixingKind::PointMass; }
  bool has_gamma() const noexcept { return skew.has_value(); }
  //! The residual law at the given parameter values.
  UnivariateLaw law(const ParameterVector& params) const;
};

enum class Mode
{
  Longitudinal,
  Meaft //!< responses and bounds are survival times, log-transformed at build
};

struct ModelSpec
{
  DesignData data;
  std::vector<Observation> observations; //!< one per row, sorted by row
  ErrorFamily error;
  RandomEffectsLaw random_effects;
  PriorSpec prior;
  Mode mode = Mode::Longitudinal;
  std::optional<double> log_base; //!< MEAFT log base; natural log when empty
  bool z_structured = true;       //!< false when some row of Z leaves its subject block

  std::size_t n() const noexcept { return data.n(); }
  std::size_t p() const noexcept { return data.p(); }
  std::size_t q() const noexcept { return data.q; }
  std::size_t r() const noexcept { return data.r; }
  bool all_exact() const noexcept;
  //! Rows of each subject, in row order.
  const std::vector<std::vector<std::size_t>>& subject_rows() const noexcept { return subject_rows_; }

  std::vector<std::vector<std::size_t>> subject_rows_;
};

//! Validate inputs and assemble a model. MEAFT values and bounds are
//! log-transformed (in `log_base` when given).
ModelSpec build_model(DesignData data, std::vector<Observation> observations, ErrorFamily error,
                      RandomEffectsLaw random_effects, PriorSpec prior, Mode mode = Mode::Longitudinal,
                      std::optional<double> log_base = {});

//! X beta + Z u.
Eigen::VectorXd linear_predictor(const ModelSpec& spec, const ParameterVector& params);

//! Numerical rank by column-pivoted QR, tolerance 1e-10 times the largest column norm.
std::size_t matrix_rank(const Eigen::MatrixXd& A);

//! (X : Z).
Eigen::MatrixXd joint_design(const DesignData& data);

//! Names of the scalar parameters the sampler moves (prior point masses excluded).
std::vector<std::string> free_scalar_slots(const ModelSpec& spec);

//! A parameter vector of the right shape: beta = 0, u = 0, neutral shapes
//! (delta 10, gamma neutral, rho 0) and every fixed value applied.
ParameterVector neutral_parameters(const ModelSpec& spec);

//! Prior-map keys that a random-effects law requires, e.g. "mu[0]", "rho".
std::vector<std::string> required_hyper_slots(const RandomEffectsLaw& law);

} // namespace flexlmm
