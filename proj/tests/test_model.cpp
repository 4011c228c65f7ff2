#include "fixtures.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/model.hpp"
#include "flexlmm/parameters.hpp"

#include <doctest.h>

#include <algorithm>

using namespace flexlmm;

using namespace fixture;

TEST_CASE("slot names parse and round trip")
{
  CHECK(parse_slot("beta[2]").base == "beta");
  CHECK(*parse_slot("beta[2]").index == 2);
  CHECK_FALSE(parse_slot("sigma_eps").index.has_value());
  CHECK(slot_name("gamma", 1) == "gamma[1]");
  CHECK_THROWS_AS(parse_slot("beta[x]"), Error);

  ParameterVector p;
  p.beta = Eigen::Vector2d(1, 2);
  p.theta_u.marginals = {MarginalParams{}};
  p.u = Eigen::Vector3d(0, 0, 0);
  set_slot(p, "beta[1]", 5.0);
  set_slot(p, "sigma[0]", 0.25);
  set_slot(p, "u[2]", -1.0);
  CHECK(get_slot(p, "beta[1]") == 5.0);
  CHECK(get_slot(p, "sigma[0]") == 0.25);
  CHECK(get_slot(p, "u[2]") == -1.0);
  CHECK_THROWS_AS(get_slot(p, "delta_eps"), Error);
  CHECK_THROWS_AS(get_slot(p, "beta[7]"), Error);
}

TEST_CASE("build_model validates shapes, rank and priors")
{
  const DesignData d = intercept_design(3, 2);
  const auto y = exact({1, 2, 3, 4, 5, 6});
  CHECK_NOTHROW(build_model(d, y, {}, normal_re(), normal_re_prior()));

  DesignData bad = d;
  bad.X.col(1) = bad.X.col(0);
  try {
    build_model(bad, y, {}, normal_re(), normal_re_prior());
    FAIL("expected RankDeficientX");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficientX);
  }

  CHECK_THROWS_AS(build_model(d, exact({1, 2, 3}), {}, normal_re(), normal_re_prior()), Error);

  PriorSpec missing;
  missing.hyper.emplace("mu[0]", ProperPrior::point_mass(0.0));
  try {
    build_model(d, y, {}, normal_re(), missing);
    FAIL("expected InvalidPrior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidPrior);
  }
  PriorSpec extra = normal_re_prior();
  extra.hyper.emplace("rho", ProperPrior::spearman_rho());
  CHECK_THROWS_AS(build_model(d, y, {}, normal_re(), extra), Error);

  ErrorFamily t;
  t.mixing = MixingKind::Gamma;
  CHECK_THROWS_AS(build_model(d, y, t, normal_re(), normal_re_prior()), Error); // no delta_eps prior
}

TEST_CASE("censoring validation and MEAFT transform")
{
  const DesignData d = intercept_design(2, 2);
  auto obs = exact({1.0, 10.0, 100.0, 1000.0});
  obs[3].censor = CensorKind::Interval;
  obs[3].lower = 5.0;
  obs[3].upper = 2.0;
  try {
    build_model(d, obs, {}, normal_re(), normal_re_prior());
    FAIL("expected UnorderedInterval");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnorderedInterval);
  }
  obs[3].lower = 500.0;
  obs[3].upper = 2000.0;
  const ModelSpec s = build_model(d, obs, {}, normal_re(), normal_re_prior(), Mode::Meaft, 10.0);
  CHECK(s.observations[1].value == doctest::Approx(1.0));
  CHECK(s.observations[3].upper == doctest::Approx(std::log10(2000.0)));

  auto zero = exact({0.0, 1.0, 2.0, 3.0});
  try {
    build_model(d, zero, {}, normal_re(), normal_re_prior(), Mode::Meaft);
    FAIL("expected NonPositiveSurvivalTime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveSurvivalTime);
  }
}

TEST_CASE("observations are reordered by row")
{
  const DesignData d = intercept_design(2, 2);
  auto obs = exact({1, 2, 3, 4});
  std::reverse(obs.begin(), obs.end());
  const ModelSpec s = build_model(d, obs, {}, normal_re(), normal_re_prior());
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(s.observations[i].value == double(i + 1));
  CHECK(s.subject_rows()[1] == std::vector<std::size_t>{2, 3});
  CHECK(s.all_exact());
}

TEST_CASE("linear predictor agrees with the dense product")
{
  DesignData d = intercept_design(3, 3);
  const ModelSpec s = build_model(d, exact(std::vector<double>(9, 0.0)), {}, normal_re(), normal_re_prior());
  ParameterVector p = neutral_parameters(s);
  p.beta = Eigen::Vector2d(0.5, -1.0);
  p.u = Eigen::Vector3d(1.0, 2.0, 3.0);
  const Eigen::VectorXd ref = d.X * p.beta + d.Z * p.u;
  CHECK((linear_predictor(s, p) - ref).norm() < 1e-14);
  CHECK(joint_design(d).cols() == 5);
}

TEST_CASE("free slots skip point masses and neutral values apply them")
{
  const DesignData d = intercept_design(3, 2);
  ErrorFamily e;
  e.mixing = MixingKind::Gamma;
  e.skew = SkewParameterisation::EpsilonSkew;
  PriorSpec pr = normal_re_prior();
  pr.delta_eps = ProperPrior::df_prior();
  pr.gamma_eps = ProperPrior::uniform(-1, 1);
  const ModelSpec s = build_model(d, exact({1, 2, 3, 4, 5, 6}), e, normal_re(), pr);
  const auto slots = free_scalar_slots(s);
  const std::vector<std::string> want = {"beta[0]", "beta[1]", "sigma_eps", "delta_eps", "gamma_eps", "sigma[0]"};
  CHECK(slots == want);
  const ParameterVector p = neutral_parameters(s);
  CHECK(*p.delta_eps == 10.0);
  CHECK(*p.gamma_eps == 0.0);
  CHECK(p.theta_u.marginals[0].mu == 0.0);
  CHECK(p.u.size() == 3);
}

TEST_CASE("required hyper slots follow the law")
{
  RandomEffectsLaw l;
  l.marginals = {MarginalKind::TwoPieceSinhArcsinh, MarginalKind::Normal};
  l.gaussian_copula = true;
  const auto s = required_hyper_slots(l);
  for (const std::string k : {"mu[0]", "sigma[0]", "gamma[0]", "delta[0]", "mu[1]", "sigma[1]", "rho"})
    CHECK(std::find(s.begin(), s.end(), k) != s.end());
  CHECK(s.size() == 7);
}

TEST_CASE("unstructured Z is flagged")
{
  DesignData d = intercept_design(2, 2);
  d.Z(0, 1) = 0.5;
  const ModelSpec s = build_model(d, exact({1, 2, 3, 4}), {}, normal_re(), normal_re_prior());
  CHECK_FALSE(s.z_structured);
}
