#include "flexlmm/error.hpp"
#include "flexlmm/io.hpp"
#include "flexlmm/simulation.hpp"

#include <doctest.h>

#include <sstream>

using namespace flexlmm;

namespace {

ErrorCode code_of(const std::function<void()>& f)
{
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::InvalidArgument;
}

Dataset parse(const std::string& text, bool survival = false)
{
  std::istringstream in(text);
  return read_dataset(in, survival);
}

} // namespace

TEST_CASE("FNV-1a reference vectors")
{
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("reading a mixed-censoring data file")
{
  const Dataset ds = parse("subject,censor,y,lower,upper,x_1,x_t\n"
                           "a,exact,1.5,,,1,0\n"
                           "a,right,NA,2.0,NA,1,1\n"
                           "b,left,,,0.5,1,0\n"
                           "b,interval,,0.1,0.9,1,1\n"
                           "c,,3.0,,,1,0\n");
  CHECK(ds.data.n() == 5);
  CHECK(ds.data.r == 3);
  CHECK(ds.data.q == 1);
  CHECK(ds.subject_ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(ds.observations[1].censor == CensorKind::Right);
  CHECK(std::isinf(ds.observations[1].upper));
  CHECK(std::isinf(ds.observations[2].lower));
  CHECK(ds.observations[3].upper == 0.9);
  CHECK(ds.observations[4].censor == CensorKind::Exact);
  CHECK(ds.data.Z(3, 1) == 1.0);
  CHECK(ds.data.Z(3, 0) == 0.0);
  CHECK(ds.data.X(3, 1) == 1.0);
  CHECK(ds.x_names == std::vector<std::string>{"x_1", "x_t"});
}

TEST_CASE("data file errors")
{
  CHECK(code_of([] { parse(""); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse("subject,y,w\n1,2,3\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse("y,x_1\n1,2\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse("subject,y\n1,2,3\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse("subject,censor,y,lower,upper\n1,interval,,2,1\n"); }) == ErrorCode::UnorderedInterval);
  CHECK(code_of([] { parse("subject,censor,y\n1,sideways,2\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse("subject,y\n1,abc\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse("subject,y\n1,0\n", true); }) == ErrorCode::NonPositiveSurvivalTime);
  CHECK(code_of([] { parse("subject,y\n"); }) == ErrorCode::EmptyData);
}

TEST_CASE("datasets survive a write/read round trip")
{
  const GeneratedData g = generate("S2-II", 3, 12);
  const Dataset ds = make_dataset(g.data, g.observations);
  std::ostringstream out;
  write_dataset(out, ds);
  const Dataset back = parse(out.str());
  CHECK(back.data.X == ds.data.X);
  CHECK(back.data.Z == ds.data.Z);
  CHECK(back.data.subject == ds.data.subject);
  for (std::size_t i = 0; i < ds.observations.size(); ++i) {
    CHECK(back.observations[i].censor == ds.observations[i].censor);
    if (ds.observations[i].censor == CensorKind::Exact)
      CHECK(back.observations[i].value == ds.observations[i].value);
    else
      CHECK(back.observations[i].lower == ds.observations[i].lower);
  }
}

TEST_CASE("config defaults")
{
  const RunConfig c = parse_config("[error]\nmixing = student_t\nskew = epsilon_skew\n");
  CHECK(c.mode == Mode::Longitudinal);
  CHECK(c.error.mixing == MixingKind::Gamma);
  REQUIRE(c.prior.delta_eps.has_value());
  CHECK(c.prior.delta_eps->describe() == ProperPrior::df_prior(1.2).describe());
  CHECK(c.prior.gamma_eps->describe() == ProperPrior::uniform(-1, 1).describe());
  CHECK(c.random_effects.marginals == std::vector<MarginalKind>{MarginalKind::Normal});
  CHECK(c.prior.hyper.at("mu[0]").describe() == "uniform(-100, 100)");
  CHECK(c.prior.hyper.at("sigma[0]").describe() == "half_cauchy(1)");
  CHECK(c.prior.b == 0.0);
  CHECK(c.sampler.burn_in == 7500);
}

TEST_CASE("config keys resolve by slot, then by name")
{
  const RunConfig c = parse_config("# two effects\n[model]\nmode = meaft\nlog_base = 10\n"
                                   "[random_effects]\nmarginals = two_piece_normal, normal\ncopula = gaussian\n"
                                   "[priors]\nb = 1\nbeta = uniform(-50, 50)\nsigma = half_cauchy(2)\n"
                                   "sigma[1] = half_cauchy(5)\nmu = fixed(0)\n"
                                   "[sampler]\nburn_in = 10\nthin = 2\nkeep = 30\nseed = 99\n");
  CHECK(c.mode == Mode::Meaft);
  CHECK(*c.log_base == 10.0);
  CHECK(c.prior.b == 1.0);
  CHECK_FALSE(c.prior.beta.flat);
  CHECK(c.prior.beta.hi == 50.0);
  CHECK(c.prior.hyper.at("sigma[0]").describe() == "half_cauchy(2)");
  CHECK(c.prior.hyper.at("sigma[1]").describe() == "half_cauchy(5)");
  CHECK(c.prior.hyper.at("mu[1]").is_point_mass());
  CHECK(c.prior.hyper.at("gamma[0]").describe() == "uniform(-1, 1)");
  CHECK(c.prior.hyper.at("rho").kind() == ProperPrior::Kind::SpearmanRho);
  CHECK(c.sampler.keep == 30);
  CHECK(c.sampler.seed == 99);
}

TEST_CASE("config errors")
{
  for (const std::string bad : {"[nope]\n", "[error]\nmixing = cauchy\n", "[priors]\ndelta_eps = df(1.2)\n",
                                "[priors]\nrho = spearman()\n", "[priors]\nsigma_eps = fixed(-1)\n",
                                "mixing = normal\n", "[sampler]\nthin = -3\n", "[error]\nskew = inverse_scale_factors\n",
                                "[priors]\nsigma = half_cauchy(1)\nsigma = half_cauchy(2)\n"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_config(bad), Error);
  }
}

TEST_CASE("samples and manifests round trip")
{
  PosteriorSample s;
  s.names = {"beta[0]", "sigma_eps", "u[1]"};
  s.draws.resize(2, 3);
  s.draws << 0.1, 1.0 / 3.0, -2e-300, 5.0, 0.25, 1e10;
  ParameterVector base;
  base.beta = Eigen::VectorXd::Zero(1);
  base.u = Eigen::VectorXd::Zero(2);
  const PosteriorSample back = read_samples_csv(samples_csv(s), base);
  CHECK(back.names == s.names);
  CHECK(back.draws == s.draws);
  CHECK_THROWS_AS(read_samples_csv("beta[0],delta_eps\n1,2\n", base), Error);

  RunManifest m;
  m.created = "2026-01-01T00:00:00Z";
  m.data_path = "d.csv";
  m.data_hash = fnv1a_hex("data");
  m.config_text = "[error]\nmixing = normal\n";
  m.spec_hash = fnv1a_hex("spec");
  m.sampler.seed = 12345678901234ULL;
  m.sampler.keep = 7;
  m.verdict = "proper";
  m.samples_hash = fnv1a_hex(samples_csv(s));
  const RunManifest r = parse_manifest(manifest_json(m));
  CHECK(r.data_hash == m.data_hash);
  CHECK(r.config_text == m.config_text);
  CHECK(r.sampler.seed == m.sampler.seed);
  CHECK(r.sampler.keep == 7);
  CHECK(r.samples_hash == m.samples_hash);
  CHECK(r.verdict == "proper");
  CHECK_THROWS_AS(parse_manifest("{"), Error);
}

TEST_CASE("reports render")
{
  const GeneratedData g = generate("C-I", 1, 6);
  const ModelSpec spec = make_model("normal", g);
  const ProprietyReport rep = check_all(spec);
  CHECK(propriety_text(rep).find("proper") != std::string::npos);
  const auto j = propriety_json(rep);
  CHECK(j.find("\"overall\"") != std::string::npos);
}
