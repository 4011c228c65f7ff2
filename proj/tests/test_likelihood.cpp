#include "fixtures.hpp"
#include "oracles.hpp"

#include "flexlmm/likelihood.hpp"
#include "flexlmm/special.hpp"

#include <doctest.h>

#include <random>

using namespace flexlmm;
using namespace fixture;

namespace {

// epsilon-skew two-piece Student-t density written out by hand
double skew_t_pdf(double x, double sigma, double gamma, double nu)
{
  const double a = 1.0 - gamma, b = 1.0 + gamma;
  const double s = x < 0.0 ? b : a;
  return 2.0 / (a + b) * oracle::student_t_pdf(x / (sigma * s), nu) / sigma;
}

ModelSpec skew_t_model(const std::vector<Observation>& obs)
{
  ErrorFamily e;
  e.mixing = MixingKind::Gamma;
  e.skew = SkewParameterisation::EpsilonSkew;
  PriorSpec p = normal_re_prior();
  p.delta_eps = ProperPrior::df_prior();
  p.gamma_eps = ProperPrior::uniform(-1, 1);
  return build_model(intercept_design(3, 3), obs, e, normal_re(), p);
}

ParameterVector some_params(const ModelSpec& s)
{
  ParameterVector p = neutral_parameters(s);
  p.beta = Eigen::Vector2d(0.3, 0.8);
  p.sigma_eps = 0.7;
  p.delta_eps = 4.5;
  p.gamma_eps = -0.35;
  p.theta_u.marginals[0].sigma = 1.3;
  p.u = Eigen::Vector3d(-0.4, 0.2, 1.1);
  return p;
}

} // namespace

TEST_CASE("exact skew-t likelihood matches the hand-written density")
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> y(9);
  for (auto& v : y)
    v = 2.0 * nd(rng);
  const ModelSpec s = skew_t_model(exact(y));
  const ParameterVector p = some_params(s);
  const LogLikelihoodBreakdown ll = loglik(s, p);
  const Eigen::VectorXd eta = s.data.X * p.beta + s.data.Z * p.u;
  double total = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    const double ref = std::log(skew_t_pdf(y[i] - eta[Eigen::Index(i)], 0.7, -0.35, 4.5));
    CHECK(ll.per_observation[Eigen::Index(i)] == doctest::Approx(ref).epsilon(1e-12));
    total += ref;
  }
  CHECK(ll.total == doctest::Approx(total).epsilon(1e-12));
  CHECK(ll.per_subject.sum() == doctest::Approx(total).epsilon(1e-12));
  CHECK(ll.per_subject[0] == doctest::Approx(ll.per_observation.head(3).sum()).epsilon(1e-12));
}

TEST_CASE("censored terms are log probabilities of the censoring set")
{
  auto obs = exact(std::vector<double>(9, 0.0));
  obs[0].censor = CensorKind::Interval;
  obs[0].lower = -0.5;
  obs[0].upper = 1.0;
  obs[4].censor = CensorKind::Right;
  obs[4].lower = 2.0;
  obs[4].upper = INFINITY;
  obs[8].censor = CensorKind::Left;
  obs[8].lower = -INFINITY;
  obs[8].upper = -1.0;
  const ModelSpec s = skew_t_model(obs);
  const ParameterVector p = some_params(s);
  const LogLikelihoodBreakdown ll = loglik(s, p);
  const Eigen::VectorXd eta = s.data.X * p.beta + s.data.Z * p.u;
  auto mass = [&](std::size_t i, double lo, double hi) {
    const double e = eta[Eigen::Index(i)];
    auto f = [&](double x) { return skew_t_pdf(x - e, 0.7, -0.35, 4.5); };
    if (std::isinf(hi))
      return oracle::simpson_half_line(f, lo, 1.0, 400000);
    if (std::isinf(lo))
      return oracle::simpson_half_line([&](double x) { return f(-x); }, -hi, 1.0, 400000);
    // split at the mode where the density has a kink
    if (lo < e && e < hi)
      return oracle::simpson(f, lo, e, 20000) + oracle::simpson(f, e, hi, 20000);
    return oracle::simpson(f, lo, hi, 20000);
  };
  CHECK(ll.per_observation[0] == doctest::Approx(std::log(mass(0, -0.5, 1.0))).epsilon(1e-8));
  CHECK(ll.per_observation[4] == doctest::Approx(std::log(mass(4, 2.0, INFINITY))).epsilon(1e-6));
  CHECK(ll.per_observation[8] == doctest::Approx(std::log(mass(8, -INFINITY, -1.0))).epsilon(1e-6));
  CHECK(ll.floored == 0);
}

TEST_CASE("normal censored term is log(Phi(u) - Phi(l))")
{
  Observation o;
  o.censor = CensorKind::Interval;
  o.lower = 0.2;
  o.upper = 1.4;
  const UnivariateLaw n(SymmetricBase::normal(), 0.0, 2.0);
  CHECK(observation_loglik(o, 0.5, n) ==
        doctest::Approx(std::log(normal_cdf((1.4 - 0.5) / 2.0) - normal_cdf((0.2 - 0.5) / 2.0))).epsilon(1e-13));
  o.censor = CensorKind::Exact;
  o.value = 1.0;
  CHECK(observation_loglik(o, 0.5, n) == doctest::Approx(std::log(oracle::normal_pdf(1.0, 0.5, 2.0))).epsilon(1e-13));
}

TEST_CASE("log joint is the sum of its parts")
{
  const ModelSpec s = skew_t_model(exact({0.1, -0.3, 2.0, 1.0, 0.0, 0.5, -1.0, 3.0, 2.2}));
  const ParameterVector p = some_params(s);
  double re = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i)
    re += std::log(oracle::normal_pdf(p.u[i], 0.0, 1.3));
  CHECK(random_effects_logpdf(s, p) == doctest::Approx(re).epsilon(1e-13));
  CHECK(subject_random_effects_logpdf(s, p, 2) == doctest::Approx(std::log(oracle::normal_pdf(1.1, 0.0, 1.3))));
  const double lj = log_joint(s, p);
  CHECK(lj == doctest::Approx(loglik(s, p).total + re + log_prior(s.prior, p)).epsilon(1e-13));

  ParameterVector out = p;
  out.gamma_eps = 1.5;
  CHECK(log_joint(s, out) == -INFINITY);
}
