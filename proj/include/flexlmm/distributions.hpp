#pragma once

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace flexlmm {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Mixing distributions for scale mixtures of normals
// ---------------------------------------------------------------------------

enum class MixingKind
{
  Gamma,            //!< tau ~ Gamma(delta/2, rate delta/2): Student-t
  Beta,             //!< tau ~ Beta(delta/2, 1)
  BirnbaumSaunders, //!< tau ~ BS(shape delta, scale 1/delta)
  PointMass         //!< tau = 1: normal
};

const char* to_string(MixingKind kind) noexcept;

struct MixingDistribution
{
  MixingKind kind = MixingKind::PointMass;
  double delta = 1.0;

  //! Log density of tau. Not defined for PointMass.
  double logpdf(double tau) const;
  double sample(Rng& rng) const;
  //! E[tau^{-c}] in closed form; +inf when the moment does not exist.
  double negative_moment(double c) const;
};

//! Log density at x of the univariate SMN with scale sigma, i.e.
//! log of the integral of tau^{1/2} N(x; 0, sigma^2) over dH(tau | delta).
double smn_logpdf(double x, double sigma, const MixingDistribution& mixing);
double smn_cdf(double x, double sigma, const MixingDistribution& mixing);

// ---------------------------------------------------------------------------
// Two-piece construction
// ---------------------------------------------------------------------------

enum class SkewParameterisation
{
  EpsilonSkew,        //!< {a, b} = {1 - gamma, 1 + gamma}, gamma in (-1, 1)
  InverseScaleFactors //!< {a, b} = {gamma, 1 / gamma}, gamma in (0, inf)
};

const char* to_string(SkewParameterisation p) noexcept;

//! Right (a) and left (b) scale factors of a two-piece law.
struct ScaleFactors
{
  double a = 1.0;
  double b = 1.0;
  double max() const noexcept { return a > b ? a : b; }
};

bool gamma_in_domain(SkewParameterisation p, double gamma) noexcept;
ScaleFactors scale_factors(SkewParameterisation p, double gamma);

struct Skew
{
  SkewParameterisation parameterisation = SkewParameterisation::EpsilonSkew;
  double gamma = 0.0;
};

//! Two-piece density built from a standardised symmetric log density.
double twopiece_logpdf(double x, double mu, double sigma, double gamma,
                       SkewParameterisation parameterisation,
                       const std::function<double(double)>& base_logpdf);

//! Symmetric sinh-arcsinh density with kurtosis parameter delta (delta = 1: normal).
double sinharcsinh_logpdf(double x, double delta);

// ---------------------------------------------------------------------------
// Standardised symmetric unimodal bases and location-scale laws
// ---------------------------------------------------------------------------

class SymmetricBase
{
public:
  enum class Kind
  {
    Normal,
    StudentT,
    Smn, //!< Beta or Birnbaum-Saunders mixing, evaluated by quadrature
    SinhArcsinh
  };

  static SymmetricBase normal();
  static SymmetricBase student_t(double nu);
  //! Gamma mixing collapses to Student-t and PointMass to Normal.
  static SymmetricBase smn(const MixingDistribution& mixing);
  static SymmetricBase sinh_arcsinh(double delta);

  double logpdf(double z) const;
  double cdf(double z) const;
  double sf(double z) const { return cdf(-z); }
  double log_cdf(double z) const;
  double quantile(double p) const;
  double sample(Rng& rng) const;

  Kind kind() const noexcept { return kind_; }
  double shape() const noexcept { return shape_; }

private:
  SymmetricBase(Kind kind, double shape, MixingDistribution mixing);

  Kind kind_;
  double shape_;
  MixingDistribution mixing_;
  double log_const_ = 0.0;
};

//! Location-scale law on a symmetric base, optionally two-piece.
class UnivariateLaw
{
public:
  UnivariateLaw(SymmetricBase base, double mu, double sigma, std::optional<Skew> skew = {});

  double logpdf(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  double log_cdf(double x) const;
  double log_sf(double x) const;
  double quantile(double p) const;
  double sample(Rng& rng) const;

  //! log P(lo < X < hi); bounds may be infinite. Probabilities below
  //! exp(-700) are floored there and reported through `floored`.
  double log_interval_probability(double lo, double hi, bool* floored = nullptr) const;

  double mode() const noexcept { return mu_; }
  double mass_below_mode() const noexcept { return b_ / (a_ + b_); }
  const SymmetricBase& base() const noexcept { return base_; }

private:
  SymmetricBase base_;
  double mu_;
  double sigma_;
  double a_ = 1.0;
  double b_ = 1.0;
  double log_norm_ = 0.0;
};

inline constexpr double kLogProbabilityFloor = -700.0;

// ---------------------------------------------------------------------------
// Random-effects laws
// ---------------------------------------------------------------------------

enum class MarginalKind
{
  Normal,
  StudentT,
  TwoPieceNormal,
  TwoPieceSinhArcsinh
};

const char* to_string(MarginalKind kind) noexcept;

struct MarginalParams
{
  double mu = 0.0;
  double sigma = 1.0;
  double gamma = 0.0; //!< epsilon-skew parameter of two-piece marginals
  double delta = 1.0; //!< degrees of freedom / kurtosis
};

//! Names of the parameters a marginal kind uses, in canonical order.
std::vector<std::string> marginal_parameter_names(MarginalKind kind);

//! The marginal as a location-scale law (two-piece marginals use epsilon-skew).
UnivariateLaw marginal_law(MarginalKind kind, const MarginalParams& params);

struct RandomEffectsParams
{
  std::vector<MarginalParams> marginals;
  double rho = 0.0; //!< exchangeable Gaussian-copula correlation
};

struct RandomEffectsLaw
{
  std::vector<MarginalKind> marginals;
  bool gaussian_copula = false;
  //! Stochastic-frontier style sign restriction u > 0 (independent marginals only).
  bool truncate_positive = false;

  std::size_t q() const noexcept { return marginals.size(); }
  bool has_rho() const noexcept { return gaussian_copula && marginals.size() >= 2; }

  //! Joint log density of one subject's q-vector.
  double logpdf(std::span<const double> u, const RandomEffectsParams& params) const;
  void sample(std::span<double> out, const RandomEffectsParams& params, Rng& rng) const;
};

//! Gaussian-copula log density: log c_R(F_1(u_1), ..., F_q(u_q)) + sum log f_i(u_i).
double copula_logpdf(std::span<const double> u, const RandomEffectsLaw& law,
                     const RandomEffectsParams& params);

//! Spearman rank correlation of a bivariate Gaussian copula, (6/pi) asin(rho/2).
double spearman_from_rho(double rho);
//! Inverse map 2 sin(pi r / 6).
double rho_from_spearman(double r);

} // namespace flexlmm
