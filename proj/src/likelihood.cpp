#include "flexlmm/likelihood.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/special.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace flexlmm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double observation_loglik(const Observation& obs, double eta, const UnivariateLaw& err, bool* floored)
{
  if (floored)
    *floored = false;
  switch (obs.censor) {
    case CensorKind::Exact: return err.logpdf(obs.value - eta);
    case CensorKind::Interval: return err.log_interval_probability(obs.lower - eta, obs.upper - eta, floored);
    case CensorKind::Right: return err.log_interval_probability(obs.lower - eta, kInf, floored);
    case CensorKind::Left: return err.log_interval_probability(-kInf, obs.upper - eta, floored);
  }
  return -kInf;
}

LogLikelihoodBreakdown loglik(const ModelSpec& spec, const ParameterVector& params)
{
  const Eigen::VectorXd eta = linear_predictor(spec, params);
  const UnivariateLaw err = spec.error.law(params);
  LogLikelihoodBreakdown out;
  const std::size_t n = spec.n();
  out.per_observation.resize(Eigen::Index(n));
  for (std::size_t i = 0; i < n; ++i) {
    bool fl = false;
    out.per_observation[Eigen::Index(i)] = observation_loglik(spec.observations[i], eta[Eigen::Index(i)], err, &fl);
    out.floored += fl ? 1 : 0;
  }
  const auto& rows = spec.subject_rows();
  out.per_subject.resize(Eigen::Index(rows.size()));
  std::vector<double> buf;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    buf.clear();
    for (std::size_t i : rows[s])
      buf.push_back(out.per_observation[Eigen::Index(i)]);
    out.per_subject[Eigen::Index(s)] = pairwise_sum(buf);
  }
  out.total = pairwise_sum({out.per_observation.data(), n});
  return out;
}

double subject_random_effects_logpdf(const ModelSpec& spec, const ParameterVector& params, std::size_t subject)
{
  const std::size_t q = spec.q();
  if (q == 0)
    return 0.0;
  return spec.random_effects.logpdf({params.u.data() + subject * q, q}, params.theta_u);
}

double random_effects_logpdf(const ModelSpec& spec, const ParameterVector& params)
{
  if (spec.q() == 0)
    return 0.0;
  if (params.u.size() != Eigen::Index(spec.q() * spec.r()))
    fail(ErrorCode::DimensionMismatch, "random-effects vector has the wrong length");
  std::vector<double> terms(spec.r());
  for (std::size_t s = 0; s < spec.r(); ++s)
    terms[s] = subject_random_effects_logpdf(spec, params, s);
  return pairwise_sum(terms);
}

double log_joint(const ModelSpec& spec, const ParameterVector& params)
{
  const double lp = log_prior(spec.prior, params);
  if (lp == -kInf)
    return -kInf;
  const double re = random_effects_logpdf(spec, params);
  if (re == -kInf)
    return -kInf;
  return loglik(spec, params).total + re + lp;
}

} // namespace flexlmm
