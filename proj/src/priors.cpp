#include "flexlmm/priors.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/special.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace flexlmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Survival function of the untruncated df prior: with t = k / (d + k),
// S(d) = 2t - t^2.
double df_prior_sf(double delta, double k)
{
  const double t = k / (delta + k);
  return t * (2.0 - t);
}

} // namespace

bool Support::bounded() const noexcept
{
  return std::isfinite(lo) || std::isfinite(hi);
}

double df_prior_logpdf(double delta, double k, double lower)
{
  if (!(delta > 0.0))
    fail(ErrorCode::NonPositiveDelta, "df prior evaluated at non-positive delta");
  if (!(k > 0.0) || !(lower >= 0.0))
    fail(ErrorCode::InvalidPrior, "df prior needs k > 0 and a non-negative lower bound");
  if (delta <= lower)
    return -kInf;
  return std::log(2.0 * k) + std::log(delta) - 3.0 * std::log(delta + k) - std::log(df_prior_sf(lower, k));
}

ProperPrior::ProperPrior(Kind kind, double a, double b, Support support)
  : kind_(kind), a_(a), b_(b), support_(support)
{
}

ProperPrior ProperPrior::half_cauchy(double scale)
{
  if (!(scale > 0.0) || !std::isfinite(scale))
    fail(ErrorCode::InvalidPrior, "half-Cauchy scale must be positive");
  return ProperPrior(Kind::HalfCauchy, scale, 0.0, {0.0, kInf});
}

ProperPrior ProperPrior::uniform(double lo, double hi)
{
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    fail(ErrorCode::InvalidPrior, "uniform window needs finite lo < hi");
  return ProperPrior(Kind::UniformWindow, lo, hi, {lo, hi});
}

ProperPrior ProperPrior::df_prior(double k, double lower)
{
  if (!(k > 0.0) || !std::isfinite(k) || !(lower >= 0.0) || !std::isfinite(lower))
    fail(ErrorCode::InvalidPrior, "df prior needs k > 0 and a finite non-negative lower bound");
  return ProperPrior(Kind::DfPrior, k, lower, {lower, kInf});
}

ProperPrior ProperPrior::spearman_rho()
{
  return ProperPrior(Kind::SpearmanRho, 0.0, 0.0, {-1.0, 1.0});
}

ProperPrior ProperPrior::point_mass(double value)
{
  if (!std::isfinite(value))
    fail(ErrorCode::InvalidPrior, "point mass must be finite");
  const double below = std::nextafter(value, -kInf), above = std::nextafter(value, kInf);
  return ProperPrior(Kind::PointMass, value, 0.0, {below, above});
}

ProperPrior ProperPrior::custom(std::function<double(double)> logpdf, Support support, std::string label)
{
  if (!logpdf || !(support.lo < support.hi))
    fail(ErrorCode::InvalidPrior, "custom prior needs a density and a non-empty support");
  ProperPrior p(Kind::Custom, 0.0, 0.0, support);
  p.custom_ = std::move(logpdf);
  p.label_ = std::move(label);
  return p;
}

double ProperPrior::logpdf(double x) const
{
  if (kind_ == Kind::PointMass)
    return x == a_ ? 0.0 : -kInf;
  if (!support_.contains(x))
    return -kInf;
  switch (kind_) {
    case Kind::HalfCauchy: {
      const double z = x / a_;
      return std::log(2.0 / (kPi * a_)) - std::log1p(z * z);
    }
    case Kind::UniformWindow:
      return -std::log(b_ - a_);
    case Kind::DfPrior:
      return df_prior_logpdf(x, a_, b_);
    case Kind::SpearmanRho:
      // normaliser: integral of (1 - (r/2)^2)^(-1/2) over (-1, 1) is 2 pi / 3
      return std::log(3.0 / (2.0 * kPi)) - 0.5 * std::log1p(-0.25 * x * x);
    case Kind::Custom:
      return custom_(x);
    case Kind::PointMass:
      break;
  }
  return -kInf;
}

double ProperPrior::sample(Rng& rng) const
{
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (kind_) {
    case Kind::HalfCauchy:
      return a_ * std::tan(0.5 * kPi * unif(rng));
    case Kind::UniformWindow:
      return a_ + (b_ - a_) * unif(rng);
    case Kind::DfPrior: {
      // invert S(d) = 1 - (1 - t)^2 on the truncated range
      const double s = unif(rng) * df_prior_sf(b_, a_);
      const double t = 1.0 - std::sqrt(1.0 - s);
      return t > 0.0 ? a_ / t - a_ : kInf;
    }
    case Kind::SpearmanRho:
      return rho_from_spearman(2.0 * unif(rng) - 1.0);
    case Kind::PointMass:
      return a_;
    case Kind::Custom:
      break;
  }
  fail(ErrorCode::InvalidPrior, "custom priors cannot be sampled");
}

std::string ProperPrior::describe() const
{
  switch (kind_) {
    case Kind::HalfCauchy: return "half_cauchy(" + fmt(a_) + ")";
    case Kind::UniformWindow: return "uniform(" + fmt(a_) + ", " + fmt(b_) + ")";
    case Kind::DfPrior: return b_ > 0.0 ? "df(" + fmt(a_) + ", " + fmt(b_) + ")" : "df(" + fmt(a_) + ")";
    case Kind::SpearmanRho: return "spearman()";
    case Kind::PointMass: return "fixed(" + fmt(a_) + ")";
    case Kind::Custom: return label_;
  }
  return "?";
}

ProperPrior ProperPrior::truncated_below(double lower) const
{
  switch (kind_) {
    case Kind::DfPrior:
      return df_prior(a_, std::max(b_, lower));
    case Kind::UniformWindow:
      if (lower >= b_)
        fail(ErrorCode::InvalidPrior, "truncation removes the whole uniform window");
      return uniform(std::max(a_, lower), b_);
    default:
      fail(ErrorCode::InvalidPrior, "prior " + describe() + " cannot be truncated");
  }
}

ProperPrior parse_prior(const std::string& text)
{
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail(ErrorCode::InvalidPrior, "prior '" + text + "' is not of the form kind(args)");
  const std::string kind = trim(text.substr(0, open));
  std::vector<double> args;
  std::stringstream ss(text.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      continue;
    try {
      std::size_t used = 0;
      args.push_back(std::stod(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidPrior, "bad numeric argument '" + item + "' in prior '" + text + "'");
    }
  }
  auto want = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      fail(ErrorCode::InvalidPrior, "wrong number of arguments in prior '" + text + "'");
  };
  if (kind == "half_cauchy") {
    want(0, 1);
    return ProperPrior::half_cauchy(args.empty() ? 1.0 : args[0]);
  }
  if (kind == "uniform") {
    want(2, 2);
    return ProperPrior::uniform(args[0], args[1]);
  }
  if (kind == "df") {
    want(0, 2);
    return ProperPrior::df_prior(args.empty() ? kDefaultDfHyper : args[0], args.size() > 1 ? args[1] : 0.0);
  }
  if (kind == "spearman") {
    want(0, 0);
    return ProperPrior::spearman_rho();
  }
  if (kind == "fixed") {
    want(1, 1);
    return ProperPrior::point_mass(args[0]);
  }
  fail(ErrorCode::InvalidPrior, "unknown prior kind '" + kind + "'");
}

double log_prior(const PriorSpec& prior, const ParameterVector& params)
{
  if (!(prior.b >= 0.0))
    fail(ErrorCode::InvalidPrior, "prior exponent b must be non-negative");
  double total = 0.0;
  if (prior.sigma_eps_fixed) {
    if (params.sigma_eps != *prior.sigma_eps_fixed)
      return -kInf;
  } else {
    if (!(params.sigma_eps > 0.0))
      return -kInf;
    total -= (prior.b + 1.0) * std::log(params.sigma_eps);
  }
  if (!prior.beta.flat) {
    for (Eigen::Index k = 0; k < params.beta.size(); ++k) {
      if (!(params.beta[k] > prior.beta.lo && params.beta[k] < prior.beta.hi))
        return -kInf;
      total -= std::log(prior.beta.hi - prior.beta.lo);
    }
  }
  if (params.delta_eps) {
    if (!prior.delta_eps)
      fail(ErrorCode::InvalidPrior, "delta_eps is present but has no prior");
    total += prior.delta_eps->logpdf(*params.delta_eps);
  }
  if (params.gamma_eps) {
    if (!prior.gamma_eps)
      fail(ErrorCode::InvalidPrior, "gamma_eps is present but has no prior");
    total += prior.gamma_eps->logpdf(*params.gamma_eps);
  }
  for (const auto& [name, p] : prior.hyper)
    total += p.logpdf(get_slot(params, name));
  return total;
}

} // namespace flexlmm
