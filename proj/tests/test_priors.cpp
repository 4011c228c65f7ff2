#include "oracles.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/priors.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace flexlmm;

namespace {

double prior_mass(const ProperPrior& p)
{
  const Support s = p.support();
  auto f = [&](double x) { return std::exp(p.logpdf(x)); };
  if (std::isfinite(s.lo) && std::isfinite(s.hi)) {
    const double e = 1e-13 * (s.hi - s.lo);
    return oracle::simpson(f, s.lo + e, s.hi - e, 200000);
  }
  // x = lo + t/(1-t); the integrand tends to a constant as t -> 1 for the d^-2 tails,
  // so the last point is evaluated just short of 1 instead of dropped
  auto g = [&](double t) {
    t = std::min(t, 1.0 - 1e-9);
    const double x = s.lo + t / (1.0 - t);
    const double v = f(x) / ((1.0 - t) * (1.0 - t));
    return std::isfinite(v) ? v : 0.0;
  };
  return oracle::simpson(g, 0.0, 1.0, 400000);
}

} // namespace

TEST_CASE("every prior kind integrates to one")
{
  for (const ProperPrior& p : {ProperPrior::half_cauchy(1.0), ProperPrior::half_cauchy(2.5), ProperPrior::uniform(-100, 100),
                               ProperPrior::uniform(-1, 1), ProperPrior::df_prior(1.0), ProperPrior::df_prior(1.2),
                               ProperPrior::df_prior(2.0), ProperPrior::df_prior(1.2, 1.000001), ProperPrior::df_prior(4.0, 3.0)}) {
    CAPTURE(p.describe());
    CHECK(prior_mass(p) == doctest::Approx(1.0).epsilon(1e-6));
  }
  // spearman-induced density has integrable endpoint behaviour; use the closed form
  const ProperPrior sp = ProperPrior::spearman_rho();
  CHECK(oracle::simpson([&](double x) { return std::exp(sp.logpdf(x)); }, -1.0 + 1e-12, 1.0 - 1e-12, 200000) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("closed-form prior values")
{
  CHECK(ProperPrior::half_cauchy(1.0).logpdf(1.0) == doctest::Approx(std::log(1.0 / M_PI)).epsilon(1e-14));
  CHECK(std::exp(ProperPrior::spearman_rho().logpdf(0.0)) == doctest::Approx(3.0 / (2.0 * M_PI)).epsilon(1e-14));
  CHECK(ProperPrior::uniform(-1, 1).logpdf(0.3) == doctest::Approx(std::log(0.5)));
  CHECK(ProperPrior::uniform(-1, 1).logpdf(1.0) == -INFINITY);
  CHECK(ProperPrior::half_cauchy(1.0).logpdf(-0.1) == -INFINITY);
  // 2 k d / (d + k)^3 at k = 1.2
  CHECK(std::exp(df_prior_logpdf(2.0, 1.2)) == doctest::Approx(2 * 1.2 * 2.0 / std::pow(3.2, 3)).epsilon(1e-13));
}

TEST_CASE("df prior: positive at the simulation regimes, single mode, decreasing after")
{
  for (double d : {2.0, 30.0}) {
    const double v = df_prior_logpdf(d);
    CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(df_prior_logpdf(0.0), Error);
  // density 2k d/(d+k)^3 peaks at d = k/2
  double prev = df_prior_logpdf(0.6);
  for (double d = 0.61; d < 200.0; d += 0.05) {
    const double v = df_prior_logpdf(d);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("df prior sampler inverts its survival function")
{
  const ProperPrior p = ProperPrior::df_prior(1.2, 1.0);
  Rng rng(9);
  const int n = 200000;
  int above10 = 0;
  for (int i = 0; i < n; ++i) {
    const double d = p.sample(rng);
    CHECK_FALSE(d <= 1.0);
    above10 += d > 10.0;
  }
  const double ref = oracle::simpson_half_line([&](double x) { return std::exp(p.logpdf(x)); }, 10.0, 1.0, 200000);
  CHECK(double(above10) / n == doctest::Approx(ref).epsilon(0.02));
}

TEST_CASE("spearman prior makes the rank correlation uniform")
{
  const ProperPrior p = ProperPrior::spearman_rho();
  Rng rng(21);
  const int n = 100000;
  std::vector<double> r(n);
  for (auto& v : r)
    v = spearman_from_rho(p.sample(rng));
  std::sort(r.begin(), r.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = (r[i] + 1.0) / 2.0;
    ks = std::max({ks, std::fabs(F - double(i) / n), std::fabs(F - double(i + 1) / n)});
  }
  CHECK(ks < 0.01);
}

TEST_CASE("log_prior: improper sigma factor and additivity")
{
  PriorSpec spec;
  ParameterVector p;
  p.sigma_eps = 2.0;
  CHECK(log_prior(spec, p) == doctest::Approx(-std::log(2.0)));

  spec.b = 1.5;
  spec.delta_eps = ProperPrior::df_prior();
  spec.hyper.emplace("sigma[0]", ProperPrior::half_cauchy(1.0));
  p.delta_eps = 4.0;
  p.theta_u.marginals = {MarginalParams{0.0, 0.7, 0.0, 1.0}};
  const double a = log_prior(spec, p);
  p.sigma_eps = 5.0;
  const double b = log_prior(spec, p);
  CHECK(b - a == doctest::Approx(-(spec.b + 1.0) * std::log(5.0 / 2.0)).epsilon(1e-14));

  p.theta_u.marginals[0].sigma = -1.0;
  CHECK(log_prior(spec, p) == -INFINITY);
}

TEST_CASE("beta window and fixed sigma")
{
  PriorSpec spec;
  spec.beta = BetaPrior{false, -100.0, 100.0};
  ParameterVector p;
  p.beta = Eigen::Vector2d(1.0, -3.0);
  p.sigma_eps = 1.0;
  CHECK(log_prior(spec, p) == doctest::Approx(-2.0 * std::log(200.0)));
  p.beta[1] = 150.0;
  CHECK(log_prior(spec, p) == -INFINITY);

  PriorSpec fixed;
  fixed.sigma_eps_fixed = 0.5;
  p.beta = Eigen::VectorXd();
  p.sigma_eps = 0.5;
  CHECK(log_prior(fixed, p) == 0.0);
  p.sigma_eps = 0.6;
  CHECK(log_prior(fixed, p) == -INFINITY);
}

TEST_CASE("prior text round trips")
{
  for (const std::string s : {"half_cauchy(1)", "uniform(-100, 100)", "df(1.2)", "df(1.2, 1.000001)", "spearman()", "fixed(0)"}) {
    const ProperPrior p = parse_prior(s);
    CHECK(parse_prior(p.describe()).describe() == p.describe());
  }
  CHECK(parse_prior("df()").first() == doctest::Approx(kDefaultDfHyper));
  CHECK_THROWS_AS(parse_prior("gamma(1,2)"), Error);
  CHECK_THROWS_AS(parse_prior("uniform(1)"), Error);
  CHECK_THROWS_AS(parse_prior("uniform(2,1)"), Error);
  CHECK_THROWS_AS(parse_prior("half_cauchy(x)"), Error);
}

TEST_CASE("truncation keeps the density proper")
{
  const ProperPrior t = ProperPrior::df_prior(1.2).truncated_below(2.0);
  CHECK(t.support().lo == 2.0);
  CHECK(t.logpdf(1.5) == -INFINITY);
  CHECK(prior_mass(t) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(ProperPrior::half_cauchy(1.0).truncated_below(1.0), Error);
}
