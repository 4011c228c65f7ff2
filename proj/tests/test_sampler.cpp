#include "fixtures.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/sampler.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <algorithm>
#include <random>

using namespace flexlmm;
using namespace fixture;

namespace {

std::vector<double> response(std::size_t n, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = 1.0 + 0.5 * double(i % 3) + nd(rng);
  return y;
}

SamplerConfig short_run(std::uint64_t seed = 3)
{
  SamplerConfig c;
  c.burn_in = 300;
  c.thin = 2;
  c.keep = 200;
  c.seed = seed;
  return c;
}

} // namespace

TEST_CASE("slot transforms invert and carry the right Jacobian")
{
  const std::vector<Support> supports = {{-INFINITY, INFINITY}, {0.0, INFINITY}, {-INFINITY, 2.0}, {-1.0, 1.0}, {1.0, INFINITY}};
  for (const Support& s : supports) {
    const SlotTransform t = SlotTransform::for_support(s);
    for (double z : {-3.0, -0.4, 0.0, 0.7, 2.5}) {
      const double x = t.to_x(z);
      CHECK(s.contains(x));
      CHECK(t.to_z(x) == doctest::Approx(z).epsilon(1e-10));
      const double h = 1e-6;
      const double numeric = std::log(std::fabs(t.to_x(z + h) - t.to_x(z - h)) / (2 * h));
      CHECK(t.log_jacobian(z) == doctest::Approx(numeric).epsilon(1e-6));
    }
  }
  CHECK(SlotTransform::for_support({-1.0, 1.0}).kind == SlotTransform::Kind::Tanh);
  CHECK(SlotTransform::for_support({0.0, INFINITY}).kind == SlotTransform::Kind::LogAbove);
  CHECK(SlotTransform::for_support({-INFINITY, 0.0}).kind == SlotTransform::Kind::LogBelow);
}

TEST_CASE("type-7 quantiles")
{
  const std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(sorted_quantile(v, 0.0) == 1.0);
  CHECK(sorted_quantile(v, 1.0) == 5.0);
  CHECK(sorted_quantile(v, 0.5) == 3.0);
  CHECK(sorted_quantile(v, 0.1) == doctest::Approx(1.4));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  std::vector<double> w(101);
  for (auto& x : w)
    x = u(rng);
  std::sort(w.begin(), w.end());
  CHECK(sorted_quantile(w, 0.25) == w[25]);
}

TEST_CASE("effective sample size")
{
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  std::vector<double> iid(4000);
  for (auto& x : iid)
    x = nd(rng);
  CHECK(effective_sample_size(iid) == doctest::Approx(4000.0).epsilon(0.15));
  // AR(1) with phi = 0.8: n (1 - phi) / (1 + phi)
  std::vector<double> ar(20000);
  double prev = 0.0;
  for (auto& x : ar)
    prev = x = 0.8 * prev + nd(rng);
  CHECK(effective_sample_size(ar) == doctest::Approx(20000.0 * 0.2 / 1.8).epsilon(0.2));
  const std::vector<double> flat(50, 2.0);
  CHECK(effective_sample_size(flat) >= 0.0);
}

TEST_CASE("initial values are inside the priors and near least squares")
{
  const ModelSpec s = normal_model(6, 4, response(24, 4));
  Rng rng(1);
  const ParameterVector p = initialize(s, rng);
  CHECK(std::isfinite(log_prior(s.prior, p)));
  CHECK(p.sigma_eps > 0.0);
  CHECK(p.theta_u.marginals[0].sigma > 0.0);
  Eigen::VectorXd y(24);
  for (Eigen::Index i = 0; i < 24; ++i)
    y[i] = s.observations[std::size_t(i)].value;
  const Eigen::VectorXd ols = s.data.X.colPivHouseholderQr().solve(y);
  CHECK(p.beta[1] == doctest::Approx(ols[1]).epsilon(0.5));
}

TEST_CASE("same seed, same chain")
{
  const ModelSpec s = normal_model(5, 3, response(15, 5));
  const PosteriorSample a = run_chain(s, short_run(9));
  const PosteriorSample b = run_chain(s, short_run(9));
  const PosteriorSample c = run_chain(s, short_run(10));
  CHECK(a.draws == b.draws);
  CHECK(a.draws != c.draws);
  CHECK(a.size() == 200);
  CHECK(a.names.front() == "beta[0]");
  CHECK(a.names.back() == "u[4]");
}

TEST_CASE("zero iterations returns the initial state")
{
  const ModelSpec s = normal_model(5, 3, response(15, 6));
  SamplerConfig c = short_run();
  c.burn_in = 0;
  c.keep = 0;
  const PosteriorSample r = run_chain(s, c);
  CHECK(r.size() == 0);
  CHECK(r.final_state.beta == r.initial.beta);
  CHECK(r.final_state.sigma_eps == r.initial.sigma_eps);
}

TEST_CASE("proposal scales stop adapting after burn-in")
{
  const ModelSpec s = normal_model(5, 3, response(15, 7));
  const PosteriorSample r = run_chain(s, short_run());
  REQUIRE(r.log_scales_burn_in.size() == r.blocks.size());
  CHECK(r.log_scales_burn_in == r.log_scales_final);
  for (double a : r.acceptance) {
    CHECK(a > 0.05);
    CHECK(a < 0.95);
  }
}

TEST_CASE("refuses an improper posterior unless overridden")
{
  DesignData d;
  d.q = 1;
  d.r = 4;
  d.X = Eigen::MatrixXd::Ones(4, 1);
  d.Z = Eigen::MatrixXd::Identity(4, 4);
  d.subject = {0, 1, 2, 3};
  const ModelSpec s = build_model(d, exact({0.1, 0.5, -0.2, 1.0}), {}, normal_re(), normal_re_prior());
  try {
    run_chain(s, short_run());
    FAIL("expected a refusal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProprietyRefused);
  }
  SamplerConfig c = short_run();
  c.keep = 10;
  c.override_propriety = true;
  CHECK(run_chain(s, c).size() == 10);
}

TEST_CASE("posterior mean of a conjugate model")
{
  // known variances: (beta, u) is jointly Gaussian a posteriori
  const std::vector<double> y = response(18, 8);
  PriorSpec p;
  p.sigma_eps_fixed = 1.0;
  p.hyper.emplace("mu[0]", ProperPrior::point_mass(0.0));
  p.hyper.emplace("sigma[0]", ProperPrior::point_mass(0.8));
  const ModelSpec s = build_model(intercept_design(6, 3), exact(y), {}, normal_re(), p);
  SamplerConfig c;
  c.burn_in = 2000;
  c.thin = 2;
  c.keep = 4000;
  c.seed = 21;
  const PosteriorSample r = run_chain(s, c);

  const Eigen::MatrixXd W = joint_design(s.data);
  Eigen::MatrixXd prec = W.transpose() * W;
  for (Eigen::Index k = 2; k < prec.rows(); ++k)
    prec(k, k) += 1.0 / (0.8 * 0.8);
  const Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), 18);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(prec);
  const Eigen::VectorXd mean = ldlt.solve(W.transpose() * yy);
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(prec.rows(), prec.cols()));

  const ChainDiagnostics d = diagnostics(r);
  for (const auto& ps : d.parameters) {
    Eigen::Index k = -1;
    if (ps.name == "beta[0]")
      k = 0;
    else if (ps.name == "beta[1]")
      k = 1;
    else if (ps.name == "u[2]")
      k = 4;
    if (k < 0)
      continue;
    CAPTURE(ps.name);
    const double se = std::sqrt(cov(k, k) / ps.ess);
    CHECK(std::fabs(ps.mean - mean[k]) < 4.0 * se);
    CHECK(ps.sd == doctest::Approx(std::sqrt(cov(k, k))).epsilon(0.15));
  }
}

TEST_CASE("diagnostics summarise every column")
{
  const ModelSpec s = normal_model(4, 3, response(12, 9));
  const PosteriorSample r = run_chain(s, short_run());
  const ChainDiagnostics d = diagnostics(r);
  CHECK(d.parameters.size() == r.names.size());
  for (const auto& p : d.parameters) {
    CHECK(p.lower <= p.median);
    CHECK(p.median <= p.upper);
  }
  const auto col = r.column("sigma_eps");
  CHECK(*std::min_element(col.begin(), col.end()) > 0.0);
  CHECK_THROWS_AS(r.index_of("rho"), Error);
  CHECK(r.draw(5).sigma_eps == col[5]);
}
