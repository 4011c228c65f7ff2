#include "flexlmm/error.hpp"
#include "flexlmm/pathology.hpp"

#include <doctest.h>

#include <cmath>

using namespace flexlmm;

TEST_CASE("three-point Legendre rule from its recurrence")
{
  // Legendre: a_k = 0, b_k = k / sqrt(4k^2 - 1), total weight 2
  Eigen::VectorXd a = Eigen::VectorXd::Zero(3), b(2), x, w;
  for (int k = 1; k <= 2; ++k)
    b[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  golub_welsch(a, b, 2.0, x, w);
  REQUIRE(x.size() == 3);
  const double r = std::sqrt(0.6);
  CHECK(x[0] == doctest::Approx(-r).epsilon(1e-13));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(x[2] == doctest::Approx(r).epsilon(1e-13));
  CHECK(w[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-13));
  CHECK(w[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-13));
  CHECK(w[2] == doctest::Approx(5.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("single shared mixer factorises out of the marginal likelihood")
{
  PathologyInput in = default_pathology_input();
  in.nodes = 6;
  const PathologyReport rep = demo_single_mixer_factorisation(in);
  REQUIRE(rep.datasets.size() >= 2);
  // E[tau^(-1/2)] for Gamma(delta/2, rate delta/2)
  auto moment = [](double d) { return std::exp(0.5 * std::log(0.5 * d) + std::lgamma(0.5 * d - 0.5) - std::lgamma(0.5 * d)); };
  CHECK(rep.factor_first == doctest::Approx(moment(6.0)).epsilon(1e-8));
  CHECK(rep.factor_second == doctest::Approx(moment(12.0)).epsilon(1e-8));
  for (const auto& d : rep.datasets) {
    CHECK(d.factorisation_error < 1e-4);
    CHECK(d.bf_single == doctest::Approx(rep.bf_prior_only).epsilon(1e-4));
  }
  CHECK(rep.single_bf_spread() < 1e-4);
  // one mixer per observation lets the data speak
  CHECK(rep.per_observation_bf_spread() > 1e-2);
}

TEST_CASE("pathology input is validated")
{
  PathologyInput in = default_pathology_input();
  in.b = -1.0;
  CHECK_THROWS_AS(demo_single_mixer_factorisation(in), Error);
}
