#include "flexlmm/selection.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace flexlmm {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_sum_exp(std::span<const double> v)
{
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v)
    m = std::max(m, x);
  if (!std::isfinite(m))
    return m;
  double s = 0.0;
  for (double x : v)
    s += std::exp(x - m);
  return m + std::log(s);
}

} // namespace

GaussianKde::GaussianKde(std::vector<double> points) : pts_(std::move(points))
{
  if (pts_.size() < 2)
    fail(ErrorCode::TooFewDraws, "kernel density estimate needs at least two points");
  const double n = double(pts_.size());
  double mean = 0.0;
  for (double x : pts_)
    mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : pts_)
    ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> sorted = pts_;
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0))
    spread = std::max(sd, iqr / 1.34);
  if (!(spread > 0.0))
    fail(ErrorCode::InvalidArgument, "kernel density estimate of a constant sample");
  h_ = 0.9 * spread * std::pow(n, -0.2);
}

double GaussianKde::log_density(double x) const
{
  std::vector<double> terms(pts_.size());
  for (std::size_t s = 0; s < pts_.size(); ++s) {
    const double z = (x - pts_[s]) / h_;
    terms[s] = -0.5 * z * z;
  }
  return log_sum_exp(terms) - std::log(double(pts_.size()) * h_) - kLogSqrt2Pi;
}

SavageDickey savage_dickey(const PosteriorSample& sample, const std::string& name, double point,
                           const ProperPrior& prior, bool boundary_transform)
{
  if (prior.is_point_mass() || !prior.support().contains(point))
    fail(ErrorCode::PointOutsideSupport, "point " + std::to_string(point) + " is outside the prior support of " + name);
  std::vector<double> draws = sample.column(name);
  if (draws.size() < 100)
    fail(ErrorCode::TooFewDraws, "Savage-Dickey needs at least 100 draws, got " + std::to_string(draws.size()));

  const Support s = prior.support();
  SavageDickey out;
  if (boundary_transform && std::isfinite(s.lo) && std::isfinite(s.hi)) {
    // density of x = g(z) is f_z(z) / |g'(z)|
    const SlotTransform t = SlotTransform::for_support(s);
    for (double& v : draws) {
      v = t.to_z(v);
      if (!std::isfinite(v))
        fail(ErrorCode::OutOfSupport, "draw of " + name + " on the boundary of its support");
    }
    const GaussianKde kde(std::move(draws));
    const double z = t.to_z(point);
    out.log_posterior_density = kde.log_density(z) - t.log_jacobian(z);
    out.bandwidth = kde.bandwidth();
  } else {
    const GaussianKde kde(std::move(draws));
    out.log_posterior_density = kde.log_density(point);
    out.bandwidth = kde.bandwidth();
  }
  out.log_prior_density = prior.logpdf(point);
  out.log_bf = out.log_posterior_density - out.log_prior_density;
  out.bf = std::exp(out.log_bf);
  return out;
}

SavageDickey savage_dickey(const PosteriorSample& sample, const ModelSpec& spec, const std::string& name,
                           double point)
{
  const ProperPrior* prior = nullptr;
  if (name == "delta_eps" && spec.prior.delta_eps)
    prior = &*spec.prior.delta_eps;
  else if (name == "gamma_eps" && spec.prior.gamma_eps)
    prior = &*spec.prior.gamma_eps;
  else if (auto it = spec.prior.hyper.find(name); it != spec.prior.hyper.end())
    prior = &it->second;
  if (!prior)
    fail(ErrorCode::InvalidPrior, name + " has no independent proper prior; Savage-Dickey does not apply");
  if (prior->is_point_mass())
    fail(ErrorCode::InvalidPrior, name + " is fixed by its prior; nothing to test");
  return savage_dickey(sample, name, point, *prior);
}

double tail_odds(const PosteriorSample& sample, double threshold, const std::string& name)
{
  const std::vector<double> draws = sample.column(name);
  if (draws.empty())
    fail(ErrorCode::EmptySample, "no draws");
  std::size_t above = 0;
  for (double v : draws)
    above += v > threshold ? 1 : 0;
  if (above == draws.size())
    return std::numeric_limits<double>::infinity();
  const double p = double(above) / double(draws.size());
  return p / (1.0 - p);
}

double median_odds(std::vector<double> odds)
{
  std::erase_if(odds, [](double v) { return !std::isfinite(v); });
  if (odds.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(odds.begin(), odds.end());
  return sorted_quantile(odds, 0.5);
}

LpmlResult lpml_from_loglik(const Eigen::MatrixXd& ll)
{
  const Eigen::Index S = ll.rows(), r = ll.cols();
  if (S == 0)
    fail(ErrorCode::EmptySample, "no draws for CPO");
  LpmlResult out;
  out.log_cpo.resize(std::size_t(r));
  std::vector<double> neg(static_cast<std::size_t>(S));
  for (Eigen::Index i = 0; i < r; ++i) {
    bool bad = false;
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < S; ++s) {
      if (std::isnan(ll(s, i)) || ll(s, i) == -std::numeric_limits<double>::infinity())
        bad = true;
      else
        mx = std::max(mx, ll(s, i));
    }
    if (bad || !std::isfinite(mx)) {
      out.overflowed.push_back(std::size_t(i));
      out.log_cpo[std::size_t(i)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    for (Eigen::Index s = 0; s < S; ++s) {
      double v = ll(s, i);
      if (v < mx - 700.0) {
        v = mx - 700.0;
        ++out.clamped;
      }
      neg[std::size_t(s)] = -v;
    }
    out.log_cpo[std::size_t(i)] = std::log(double(S)) - log_sum_exp(neg);
  }
  for (double v : out.log_cpo)
    out.lpml += v;
  return out;
}

LpmlResult lpml(const PosteriorSample& sample, const ModelSpec& spec)
{
  Eigen::MatrixXd ll(Eigen::Index(sample.size()), Eigen::Index(spec.r()));
  for (std::size_t s = 0; s < sample.size(); ++s) {
    const LogLikelihoodBreakdown b = loglik(spec, sample.draw(s));
    ll.row(Eigen::Index(s)) = b.per_subject.transpose();
  }
  return lpml_from_loglik(ll);
}

Hypothesis parse_hypothesis(const std::string& text)
{
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    fail(ErrorCode::InvalidArgument, "hypothesis must look like name=value: '" + text + "'");
  Hypothesis h;
  h.name = text.substr(0, eq);
  parse_slot(h.name);
  try {
    std::size_t used = 0;
    h.point = std::stod(text.substr(eq + 1), &used);
    if (used != text.size() - eq - 1)
      throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "bad hypothesis value in '" + text + "'");
  }
  return h;
}

std::vector<Hypothesis> default_hypotheses(const ModelSpec& spec)
{
  std::vector<Hypothesis> out;
  const auto free = free_scalar_slots(spec);
  auto is_free = [&](const std::string& n) { return std::find(free.begin(), free.end(), n) != free.end(); };
  if (spec.error.skew && is_free("gamma_eps"))
    out.push_back({"gamma_eps", *spec.error.skew == SkewParameterisation::EpsilonSkew ? 0.0 : 1.0});
  for (std::size_t k = 0; k < spec.q(); ++k) {
    const std::string g = slot_name("gamma", k);
    if (is_free(g))
      out.push_back({g, 0.0});
  }
  return out;
}

SelectionReport select(const PosteriorSample& sample, const ModelSpec& spec, const std::vector<Hypothesis>& hypotheses)
{
  SelectionReport rep;
  for (const auto& h : hypotheses) {
    std::ostringstream key;
    key << h.name << '=' << h.point;
    rep.bayes_factors[key.str()] = savage_dickey(sample, spec, h.name, h.point);
  }
  if (std::find(sample.names.begin(), sample.names.end(), "delta_eps") != sample.names.end())
    rep.odds_delta_gt_10 = tail_odds(sample, 10.0);
  rep.lpml = lpml(sample, spec);
  if (rep.lpml.clamped > 0)
    rep.flags.push_back(std::to_string(rep.lpml.clamped) +
                        " harmonic-mean terms clamped at max - 700; consider a longer chain");
  for (std::size_t i : rep.lpml.overflowed)
    rep.flags.push_back("subject " + std::to_string(i) + " has a non-finite log-likelihood at some draw");
  return rep;
}

} // namespace flexlmm
