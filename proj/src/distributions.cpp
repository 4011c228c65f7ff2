#include "flexlmm/distributions.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/quadrature.hpp"
#include "flexlmm/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

namespace flexlmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_delta(double delta)
{
  if (!(delta > 0.0) || !std::isfinite(delta))
    fail(ErrorCode::NonPositiveDelta, "shape parameter must be positive, got " + std::to_string(delta));
}

void require_sigma(double sigma)
{
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    fail(ErrorCode::NonPositiveSigma, "scale must be positive, got " + std::to_string(sigma));
}

double log_cosh(double w)
{
  const double a = std::fabs(w);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// Integral over the mixing law of g(tau), for the two quadrature-backed kinds.
// Beta(delta/2, 1) is pushed to a uniform through tau = v^(2/delta); the
// Birnbaum-Saunders law is integrated in s = log(tau).
double mixing_expectation(const MixingDistribution& m, const std::function<double(double)>& g)
{
  if (m.kind == MixingKind::Beta) {
    const double e = 2.0 / m.delta;
    return quad::integral([&](double v) { return v <= 0.0 ? g(0.0) : g(std::pow(v, e)); }, 0.0, 1.0);
  }
  return quad::integral(
    [&](double s) {
      const double tau = std::exp(s);
      if (!(tau > 0.0) || !std::isfinite(tau))
        return 0.0;
      const double lw = m.logpdf(tau) + s;
      return lw > -700.0 ? std::exp(lw) * g(tau) : 0.0;
    },
    -kInf, kInf);
}

// log of  int_0^1 t^(s-1) exp(-w t) dt = gamma_lower(s, w) / w^s
double log_lower_gamma_ratio(double s, double w)
{
  if (w < 1e-8)
    return -std::log(s) + std::log1p(-w * s / (s + 1.0));
  return std::lgamma(s) + std::log(boost::math::gamma_p(s, w)) - s * std::log(w);
}

// Root of f on the real line for an increasing f; used for numeric quantiles.
double solve_increasing(const std::function<double(double)>& f, double guess)
{
  double lo = guess - 1.0, hi = guess + 1.0;
  for (int i = 0; f(lo) > 0.0 && i < 200; ++i)
    lo -= 2.0 * (hi - lo);
  for (int i = 0; f(hi) < 0.0 && i < 200; ++i)
    hi += 2.0 * (hi - lo);
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

} // namespace

const char* to_string(MixingKind kind) noexcept
{
  switch (kind) {
    case MixingKind::Gamma: return "gamma";
    case MixingKind::Beta: return "beta";
    case MixingKind::BirnbaumSaunders: return "birnbaum_saunders";
    case MixingKind::PointMass: return "point_mass";
  }
  return "?";
}

const char* to_string(SkewParameterisation p) noexcept
{
  return p == SkewParameterisation::EpsilonSkew ? "epsilon_skew" : "inverse_scale_factors";
}

const char* to_string(MarginalKind kind) noexcept
{
  switch (kind) {
    case MarginalKind::Normal: return "normal";
    case MarginalKind::StudentT: return "student_t";
    case MarginalKind::TwoPieceNormal: return "two_piece_normal";
    case MarginalKind::TwoPieceSinhArcsinh: return "two_piece_sinh_arcsinh";
  }
  return "?";
}

// ---------------------------------------------------------------------------

double MixingDistribution::logpdf(double tau) const
{
  require_delta(delta);
  if (!(tau > 0.0))
    return -kInf;
  const double d = delta;
  switch (kind) {
    case MixingKind::Gamma: {
      const double h = 0.5 * d;
      return h * std::log(h) - std::lgamma(h) + (h - 1.0) * std::log(tau) - h * tau;
    }
    case MixingKind::Beta:
      if (tau > 1.0)
        return -kInf;
      return std::log(0.5 * d) + (0.5 * d - 1.0) * std::log(tau);
    case MixingKind::BirnbaumSaunders: {
      // shape alpha = delta, scale beta = 1/delta
      const double alpha = d, beta = 1.0 / d;
      const double r = beta / tau;
      return -std::log(2.0 * std::sqrt(2.0 * kPi) * alpha * beta) + std::log(std::sqrt(r) + r * std::sqrt(r))
             - (tau / beta + beta / tau - 2.0) / (2.0 * alpha * alpha);
    }
    case MixingKind::PointMass:
      break;
  }
  fail(ErrorCode::InvalidArgument, "point-mass mixing has no density");
}

double MixingDistribution::sample(Rng& rng) const
{
  require_delta(delta);
  switch (kind) {
    case MixingKind::Gamma: {
      std::gamma_distribution<double> g(0.5 * delta, 2.0 / delta);
      return g(rng);
    }
    case MixingKind::Beta: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return std::pow(u(rng), 2.0 / delta);
    }
    case MixingKind::BirnbaumSaunders: {
      std::normal_distribution<double> n(0.0, 1.0);
      const double h = 0.5 * delta * n(rng);
      const double s = h + std::sqrt(h * h + 1.0);
      return s * s / delta;
    }
    case MixingKind::PointMass:
      return 1.0;
  }
  return 1.0;
}

double MixingDistribution::negative_moment(double c) const
{
  if (c == 0.0)
    return 1.0;
  require_delta(delta);
  switch (kind) {
    case MixingKind::Gamma:
      if (0.5 * delta <= c)
        return kInf;
      return std::exp(c * std::log(0.5 * delta) + std::lgamma(0.5 * delta - c) - std::lgamma(0.5 * delta));
    case MixingKind::Beta:
      if (delta <= 2.0 * c)
        return kInf;
      return delta / (delta - 2.0 * c);
    case MixingKind::BirnbaumSaunders: {
      const double x = 1.0 / (delta * delta);
      return std::pow(delta, c - 1.0) * (bessel_k_scaled(c - 0.5, x) + bessel_k_scaled(c + 0.5, x))
             / std::sqrt(2.0 * kPi);
    }
    case MixingKind::PointMass:
      return 1.0;
  }
  return 1.0;
}

double smn_logpdf(double x, double sigma, const MixingDistribution& mixing)
{
  require_sigma(sigma);
  const double z = x / sigma;
  switch (mixing.kind) {
    case MixingKind::PointMass:
      return normal_logpdf(z) - std::log(sigma);
    case MixingKind::Gamma:
      require_delta(mixing.delta);
      return student_t_logpdf(z, mixing.delta) - std::log(sigma);
    default:
      break;
  }
  require_delta(mixing.delta);
  const double z2 = z * z;
  if (mixing.kind == MixingKind::Beta) {
    // a int tau^(a - 1/2) exp(-tau z^2/2), a = delta/2
    const double a = 0.5 * mixing.delta;
    return std::log(a) + log_lower_gamma_ratio(a + 0.5, 0.5 * z2) - kLogSqrt2Pi - std::log(sigma);
  }
  const double v = mixing_expectation(mixing, [z2](double tau) { return std::sqrt(tau) * std::exp(-0.5 * tau * z2); });
  return std::log(v) - kLogSqrt2Pi - std::log(sigma);
}

double smn_cdf(double x, double sigma, const MixingDistribution& mixing)
{
  require_sigma(sigma);
  const double z = x / sigma;
  switch (mixing.kind) {
    case MixingKind::PointMass:
      return normal_cdf(z);
    case MixingKind::Gamma:
      require_delta(mixing.delta);
      return student_t_cdf(z, mixing.delta);
    default:
      break;
  }
  require_delta(mixing.delta);
  if (z == 0.0)
    return 0.5;
  // Integrate the lower tail so small probabilities keep relative accuracy.
  const double t = -std::fabs(z);
  if (mixing.kind == MixingKind::Beta) {
    // by parts: Phi(t) + |t| / (2 sqrt(2 pi)) int tau^(a - 1/2) exp(-tau t^2/2)
    const double a = 0.5 * mixing.delta;
    const double lower = normal_cdf(t) + std::exp(std::log(-t) - std::log(2.0) - kLogSqrt2Pi +
                                                  log_lower_gamma_ratio(a + 0.5, 0.5 * t * t));
    return z < 0.0 ? lower : 1.0 - lower;
  }
  const double lower = mixing_expectation(mixing, [t](double tau) { return normal_cdf(t * std::sqrt(tau)); });
  return z < 0.0 ? lower : 1.0 - lower;
}

// ---------------------------------------------------------------------------

bool gamma_in_domain(SkewParameterisation p, double gamma) noexcept
{
  if (p == SkewParameterisation::EpsilonSkew)
    return gamma > -1.0 && gamma < 1.0;
  return gamma > 0.0 && std::isfinite(gamma);
}

ScaleFactors scale_factors(SkewParameterisation p, double gamma)
{
  if (!gamma_in_domain(p, gamma))
    fail(ErrorCode::GammaOutOfDomain,
         std::string("skewness ") + std::to_string(gamma) + " outside the " + to_string(p) + " domain");
  if (p == SkewParameterisation::EpsilonSkew)
    return {1.0 - gamma, 1.0 + gamma};
  return {gamma, 1.0 / gamma};
}

double twopiece_logpdf(double x, double mu, double sigma, double gamma, SkewParameterisation parameterisation,
                       const std::function<double(double)>& base_logpdf)
{
  require_sigma(sigma);
  const ScaleFactors f = scale_factors(parameterisation, gamma);
  const double z = (x - mu) / sigma;
  const double s = z < 0.0 ? f.b : f.a;
  return std::log(2.0 / (f.a + f.b)) - std::log(sigma) + base_logpdf(z / s);
}

double sinharcsinh_logpdf(double x, double delta)
{
  require_delta(delta);
  const double w = delta * std::asinh(x);
  const double s = std::sinh(w);
  return std::log(delta) + log_cosh(w) - kLogSqrt2Pi - 0.5 * std::log1p(x * x) - 0.5 * s * s;
}

// ---------------------------------------------------------------------------

SymmetricBase::SymmetricBase(Kind kind, double shape, MixingDistribution mixing)
  : kind_(kind), shape_(shape), mixing_(mixing)
{
}

SymmetricBase SymmetricBase::normal()
{
  return SymmetricBase(Kind::Normal, 1.0, {});
}

SymmetricBase SymmetricBase::student_t(double nu)
{
  require_delta(nu);
  SymmetricBase base(Kind::StudentT, nu, {MixingKind::Gamma, nu});
  base.log_const_ = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi);
  return base;
}

SymmetricBase SymmetricBase::smn(const MixingDistribution& mixing)
{
  switch (mixing.kind) {
    case MixingKind::PointMass: return normal();
    case MixingKind::Gamma: return student_t(mixing.delta);
    default:
      require_delta(mixing.delta);
      return SymmetricBase(Kind::Smn, mixing.delta, mixing);
  }
}

SymmetricBase SymmetricBase::sinh_arcsinh(double delta)
{
  require_delta(delta);
  return SymmetricBase(Kind::SinhArcsinh, delta, {});
}

double SymmetricBase::logpdf(double z) const
{
  switch (kind_) {
    case Kind::Normal: return normal_logpdf(z);
    case Kind::StudentT: return log_const_ - 0.5 * (shape_ + 1.0) * std::log1p(z * z / shape_);
    case Kind::Smn: return smn_logpdf(z, 1.0, mixing_);
    case Kind::SinhArcsinh: return sinharcsinh_logpdf(z, shape_);
  }
  return 0.0;
}

double SymmetricBase::cdf(double z) const
{
  switch (kind_) {
    case Kind::Normal: return normal_cdf(z);
    case Kind::StudentT: return student_t_cdf(z, shape_);
    case Kind::Smn: return smn_cdf(z, 1.0, mixing_);
    case Kind::SinhArcsinh: return normal_cdf(std::sinh(shape_ * std::asinh(z)));
  }
  return 0.0;
}

double SymmetricBase::log_cdf(double z) const
{
  switch (kind_) {
    case Kind::Normal: return normal_logcdf(z);
    case Kind::SinhArcsinh: return normal_logcdf(std::sinh(shape_ * std::asinh(z)));
    default: return std::log(cdf(z));
  }
}

double SymmetricBase::quantile(double p) const
{
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::OutOfDomain, "probability outside [0,1]");
  if (p == 0.0)
    return -kInf;
  if (p == 1.0)
    return kInf;
  switch (kind_) {
    case Kind::Normal:
      return normal_quantile(p);
    case Kind::StudentT:
      return boost::math::quantile(boost::math::students_t_distribution<double>(shape_), p);
    case Kind::SinhArcsinh:
      return std::sinh(std::asinh(normal_quantile(p)) / shape_);
    case Kind::Smn:
      break;
  }
  // Solve on the tail that keeps the target away from 1.
  if (p > 0.5)
    return -quantile(1.0 - p);
  return solve_increasing([&](double z) { return cdf(z) - p; }, normal_quantile(p));
}

double SymmetricBase::sample(Rng& rng) const
{
  std::normal_distribution<double> n(0.0, 1.0);
  switch (kind_) {
    case Kind::Normal: return n(rng);
    case Kind::StudentT:
    case Kind::Smn: {
      const double tau = mixing_.sample(rng);
      return n(rng) / std::sqrt(tau);
    }
    case Kind::SinhArcsinh: return std::sinh(std::asinh(n(rng)) / shape_);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

UnivariateLaw::UnivariateLaw(SymmetricBase base, double mu, double sigma, std::optional<Skew> skew)
  : base_(base), mu_(mu), sigma_(sigma)
{
  require_sigma(sigma);
  if (skew) {
    const ScaleFactors f = scale_factors(skew->parameterisation, skew->gamma);
    a_ = f.a;
    b_ = f.b;
  }
  log_norm_ = std::log(2.0 / (a_ + b_)) - std::log(sigma_);
}

double UnivariateLaw::logpdf(double x) const
{
  const double z = (x - mu_) / sigma_;
  return log_norm_ + base_.logpdf(z / (z < 0.0 ? b_ : a_));
}

double UnivariateLaw::cdf(double x) const
{
  const double z = (x - mu_) / sigma_;
  if (a_ == b_)
    return base_.cdf(z / a_);
  if (z < 0.0)
    return 2.0 * b_ / (a_ + b_) * base_.cdf(z / b_);
  return 1.0 - 2.0 * a_ / (a_ + b_) * base_.sf(z / a_);
}

double UnivariateLaw::sf(double x) const
{
  const double z = (x - mu_) / sigma_;
  if (a_ == b_)
    return base_.sf(z / a_);
  if (z >= 0.0)
    return 2.0 * a_ / (a_ + b_) * base_.sf(z / a_);
  return 1.0 - 2.0 * b_ / (a_ + b_) * base_.cdf(z / b_);
}

double UnivariateLaw::log_cdf(double x) const
{
  const double z = (x - mu_) / sigma_;
  if (z < 0.0)
    return std::log(2.0 * b_ / (a_ + b_)) + base_.log_cdf(z / b_);
  return std::log1p(-sf(x));
}

double UnivariateLaw::log_sf(double x) const
{
  const double z = (x - mu_) / sigma_;
  if (z >= 0.0)
    return std::log(2.0 * a_ / (a_ + b_)) + base_.log_cdf(-z / a_);
  return std::log1p(-cdf(x));
}

double UnivariateLaw::quantile(double p) const
{
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::OutOfDomain, "probability outside [0,1]");
  if (a_ == b_)
    return mu_ + sigma_ * a_ * base_.quantile(p);
  const double w = b_ / (a_ + b_);
  if (p < w)
    return mu_ + sigma_ * b_ * base_.quantile(p / (2.0 * w));
  return mu_ - sigma_ * a_ * base_.quantile((1.0 - p) / (2.0 * (1.0 - w)));
}

double UnivariateLaw::sample(Rng& rng) const
{
  const double y = std::fabs(base_.sample(rng));
  if (a_ == b_)
    return mu_ + sigma_ * a_ * (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5 ? -y : y);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < mass_below_mode() ? mu_ - sigma_ * b_ * y : mu_ + sigma_ * a_ * y;
}

double UnivariateLaw::log_interval_probability(double lo, double hi, bool* floored) const
{
  double lp;
  if (!(lo < hi))
    lp = -kInf;
  else if (lo == -kInf && hi == kInf)
    lp = 0.0;
  else if (lo == -kInf)
    lp = log_cdf(hi);
  else if (hi == kInf)
    lp = log_sf(lo);
  else if (hi <= mu_)
    lp = log_diff_exp(log_cdf(hi), log_cdf(lo));
  else if (lo >= mu_)
    lp = log_diff_exp(log_sf(lo), log_sf(hi));
  else
    lp = std::log(1.0 - cdf(lo) - sf(hi));
  if (floored)
    *floored = false;
  if (!(lp >= kLogProbabilityFloor)) {
    if (floored)
      *floored = true;
    return kLogProbabilityFloor;
  }
  return std::min(lp, 0.0);
}

// ---------------------------------------------------------------------------

std::vector<std::string> marginal_parameter_names(MarginalKind kind)
{
  switch (kind) {
    case MarginalKind::Normal: return {"mu", "sigma"};
    case MarginalKind::StudentT: return {"mu", "sigma", "delta"};
    case MarginalKind::TwoPieceNormal: return {"mu", "sigma", "gamma"};
    case MarginalKind::TwoPieceSinhArcsinh: return {"mu", "sigma", "gamma", "delta"};
  }
  return {};
}

UnivariateLaw marginal_law(MarginalKind kind, const MarginalParams& p)
{
  switch (kind) {
    case MarginalKind::Normal:
      return UnivariateLaw(SymmetricBase::normal(), p.mu, p.sigma);
    case MarginalKind::StudentT:
      return UnivariateLaw(SymmetricBase::student_t(p.delta), p.mu, p.sigma);
    case MarginalKind::TwoPieceNormal:
      return UnivariateLaw(SymmetricBase::normal(), p.mu, p.sigma, Skew{SkewParameterisation::EpsilonSkew, p.gamma});
    case MarginalKind::TwoPieceSinhArcsinh:
      return UnivariateLaw(SymmetricBase::sinh_arcsinh(p.delta), p.mu, p.sigma,
                           Skew{SkewParameterisation::EpsilonSkew, p.gamma});
  }
  fail(ErrorCode::InvalidArgument, "unknown marginal kind");
}

namespace {

void check_dimensions(std::size_t got, const RandomEffectsLaw& law, const RandomEffectsParams& params)
{
  if (got != law.q() || params.marginals.size() != law.q())
    fail(ErrorCode::DimensionMismatch, "random-effects vector, law and parameters disagree on q");
}

void check_rho(double rho, std::size_t q)
{
  const double lower = q > 2 ? -1.0 / double(q - 1) : -1.0;
  if (!(rho > lower && rho < 1.0))
    fail(ErrorCode::CorrelationOutOfDomain, "copula correlation " + std::to_string(rho) + " outside its domain");
}

// Normal score Phi^{-1}(F(u)), clamped away from 0 and 1.
double normal_score(MarginalKind kind, const MarginalParams& p, const UnivariateLaw& law, double u)
{
  if (kind == MarginalKind::Normal)
    return (u - p.mu) / p.sigma;
  constexpr double kClamp = 1e-15;
  const double F = law.cdf(u);
  if (F <= 0.5)
    return normal_quantile(std::max(F, kClamp));
  return -normal_quantile(std::max(law.sf(u), kClamp));
}

} // namespace

double copula_logpdf(std::span<const double> u, const RandomEffectsLaw& law, const RandomEffectsParams& params)
{
  check_dimensions(u.size(), law, params);
  const std::size_t q = law.q();
  double total = 0.0, zz = 0.0, zs = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    const UnivariateLaw m = marginal_law(law.marginals[i], params.marginals[i]);
    total += m.logpdf(u[i]);
    if (q >= 2) {
      const double z = normal_score(law.marginals[i], params.marginals[i], m, u[i]);
      zz += z * z;
      zs += z;
    }
  }
  if (q < 2)
    return total;
  const double rho = params.rho;
  check_rho(rho, q);
  if (rho == 0.0)
    return total;
  // Exchangeable R = (1-rho) I + rho 11'.
  const double qd = double(q);
  const double denom = 1.0 + (qd - 1.0) * rho;
  const double log_det = (qd - 1.0) * std::log1p(-rho) + std::log(denom);
  const double quad_form = (zz - rho * zs * zs / denom) / (1.0 - rho);
  return total - 0.5 * log_det - 0.5 * (quad_form - zz);
}

double RandomEffectsLaw::logpdf(std::span<const double> u, const RandomEffectsParams& params) const
{
  check_dimensions(u.size(), *this, params);
  if (has_rho())
    return copula_logpdf(u, *this, params);
  double total = 0.0;
  for (std::size_t i = 0; i < q(); ++i) {
    const UnivariateLaw m = marginal_law(marginals[i], params.marginals[i]);
    if (truncate_positive) {
      if (!(u[i] > 0.0))
        return -kInf;
      total -= m.log_sf(0.0);
    }
    total += m.logpdf(u[i]);
  }
  return total;
}

void RandomEffectsLaw::sample(std::span<double> out, const RandomEffectsParams& params, Rng& rng) const
{
  check_dimensions(out.size(), *this, params);
  const std::size_t n = q();
  if (!has_rho()) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const UnivariateLaw m = marginal_law(marginals[i], params.marginals[i]);
      if (truncate_positive) {
        const double lo = m.cdf(0.0);
        out[i] = m.quantile(lo + unif(rng) * (1.0 - lo));
      } else {
        out[i] = m.sample(rng);
      }
    }
    return;
  }
  check_rho(params.rho, n);
  Eigen::MatrixXd R = Eigen::MatrixXd::Constant(Eigen::Index(n), Eigen::Index(n), params.rho);
  R.diagonal().setOnes();
  const Eigen::MatrixXd L = R.llt().matrixL();
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd e(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    e[Eigen::Index(i)] = nd(rng);
  const Eigen::VectorXd z = L * e;
  constexpr double kClamp = 1e-15;
  for (std::size_t i = 0; i < n; ++i) {
    const MarginalParams& p = params.marginals[i];
    const double zi = z[Eigen::Index(i)];
    if (marginals[i] == MarginalKind::Normal) {
      out[i] = p.mu + p.sigma * zi;
      continue;
    }
    const double prob = std::clamp(normal_cdf(zi), kClamp, 1.0 - kClamp);
    out[i] = marginal_law(marginals[i], p).quantile(prob);
  }
}

double spearman_from_rho(double rho)
{
  if (!(rho >= -1.0 && rho <= 1.0))
    fail(ErrorCode::OutOfDomain, "correlation outside [-1,1]");
  return std::clamp(6.0 / kPi * std::asin(0.5 * rho), -1.0, 1.0);
}

double rho_from_spearman(double r)
{
  if (!(r >= -1.0 && r <= 1.0))
    fail(ErrorCode::OutOfDomain, "rank correlation outside [-1,1]");
  return 2.0 * std::sin(kPi * r / 6.0);
}

} // namespace flexlmm
