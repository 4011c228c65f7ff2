#include "flexlmm/simulation.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace flexlmm {

namespace {

struct Generator
{
  enum class Kind
  {
    Normal,
    StudentT2,
    TwoPieceNormal
  };
  Kind kind;
  double mu;
  double sigma;
  double gamma = 0.0;

  double draw(Rng& rng) const
  {
    switch (kind) {
      case Kind::Normal: return mu + sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
      case Kind::StudentT2: return mu + sigma * std::student_t_distribution<double>(2.0)(rng);
      case Kind::TwoPieceNormal:
        return marginal_law(MarginalKind::TwoPieceNormal, {mu, sigma, gamma, 1.0}).sample(rng);
    }
    return mu;
  }
};

struct ScenarioDef
{
  std::string id;
  std::string family; // "S1", "S2", "C"
  Generator error;
  Generator effect;
  std::string description;
};

using G = Generator::Kind;

const std::vector<ScenarioDef>& scenarios()
{
  static const std::vector<ScenarioDef> defs = {
    {"S1-I", "S1", {G::StudentT2, 0.0, 0.5}, {G::TwoPieceNormal, -1.5, 0.5, 0.5}, "eps ~ t(0,0.5,2), u ~ TPN(-1.5,0.5,0.5)"},
    {"S1-II", "S1", {G::Normal, 0.0, 0.5}, {G::TwoPieceNormal, -1.5, 0.5, 0.5}, "eps ~ N(0,0.5), u ~ TPN(-1.5,0.5,0.5)"},
    {"S1-III", "S1", {G::StudentT2, 0.0, 0.5}, {G::Normal, -1.5, 0.5}, "eps ~ t(0,0.5,2), u ~ N(-1.5,0.5)"},
    {"S1-IV", "S1", {G::Normal, 0.0, 0.5}, {G::Normal, -1.5, 0.5}, "eps ~ N(0,0.5), u ~ N(-1.5,0.5)"},
    {"S2-I", "S2", {G::Normal, 0.0, 0.5}, {G::Normal, 0.0, 0.25}, "eps ~ N(0,0.5), u ~ N(0,0.25), right-censored above log10(75000)"},
    {"S2-II", "S2", {G::StudentT2, 0.0, 0.5}, {G::StudentT2, 0.0, 0.25}, "eps ~ t(0,0.5,2), u ~ t(0,0.25,2), right-censored above log10(75000)"},
    {"C-I", "C", {G::Normal, 0.0, 0.5}, {G::Normal, -1.5, 0.5}, "eps ~ N(0,0.5), u ~ N(-1.5,0.5)"},
    {"C-II", "C", {G::TwoPieceNormal, 0.0, 0.5, 0.5}, {G::Normal, -1.5, 0.5}, "eps ~ TPN(0,0.5,0.5), u ~ N(-1.5,0.5)"},
    {"C-III", "C", {G::Normal, 0.0, 0.5}, {G::TwoPieceNormal, -1.5, 0.5, 0.5}, "eps ~ N(0,0.5), u ~ TPN(-1.5,0.5,0.5)"},
    {"C-IV", "C", {G::TwoPieceNormal, 0.0, 0.5, 0.5}, {G::TwoPieceNormal, -1.5, 0.5, 0.5}, "eps ~ TPN(0,0.5,0.5), u ~ TPN(-1.5,0.5,0.5)"},
  };
  return defs;
}

const ScenarioDef& find_scenario(const std::string& id)
{
  for (const auto& d : scenarios())
    if (d.id == id)
      return d;
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + id + "'");
}

const double kCensorThreshold = std::log10(75000.0);

void add_truth(std::map<std::string, double>& truth, const Generator& g, bool error)
{
  if (error) {
    truth["sigma_eps"] = g.sigma;
    if (g.kind == G::StudentT2)
      truth["delta_eps"] = 2.0;
    if (g.kind == G::TwoPieceNormal)
      truth["gamma_eps"] = g.gamma;
  } else {
    truth["mu[0]"] = g.mu;
    truth["sigma[0]"] = g.sigma;
    if (g.kind == G::StudentT2)
      truth["delta[0]"] = 2.0;
    if (g.kind == G::TwoPieceNormal)
      truth["gamma[0]"] = g.gamma;
  }
}

std::uint64_t string_hash(const std::string& s)
{
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

PriorSpec base_prior()
{
  PriorSpec p;
  p.b = 0.0;
  p.hyper.emplace("sigma[0]", ProperPrior::half_cauchy(1.0));
  return p;
}

} // namespace

const std::vector<std::string>& scenario_ids()
{
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& d : scenarios())
      v.push_back(d.id);
    return v;
  }();
  return ids;
}

std::string scenario_description(const std::string& id) { return find_scenario(id).description; }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GeneratedData generate(const std::string& scenario, std::uint64_t seed, std::size_t subjects)
{
  const ScenarioDef& def = find_scenario(scenario);
  const std::size_t r = subjects == 0 ? 100 : subjects;
  const std::size_t m = 5;
  const std::size_t n = r * m;
  Rng rng(seed);

  GeneratedData g;
  g.scenario = scenario;
  g.data.q = 1;
  g.data.r = r;
  g.data.Z = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(r));
  const bool s2 = def.family == "S2";
  g.data.X = Eigen::MatrixXd::Zero(Eigen::Index(n), s2 ? 5 : 2);
  const std::vector<double> beta = s2 ? std::vector<double>{2.5, 3.0, 3.5, 4.0, 4.5} : std::vector<double>{2.0, 1.0};
  for (std::size_t k = 0; k < beta.size(); ++k)
    g.truth[slot_name("beta", k)] = beta[k];
  add_truth(g.truth, def.error, true);
  add_truth(g.truth, def.effect, false);
  if (s2)
    g.truth.erase("mu[0]");

  std::size_t censored = 0;
  for (std::size_t i = 0; i < r; ++i) {
    const double u = def.effect.draw(rng);
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::Index row = Eigen::Index(i * m + j);
      double mean = u;
      if (s2) {
        g.data.X(row, Eigen::Index(j)) = 1.0;
        mean += beta[j];
      } else {
        const double t = double(j + 1) - 3.0;
        const double w = (i + 1) <= r / 2 ? 1.0 : 0.0;
        g.data.X(row, 0) = t;
        g.data.X(row, 1) = w;
        mean += t * beta[0] + w * beta[1];
      }
      g.data.Z(row, Eigen::Index(i)) = 1.0;
      g.data.subject.push_back(i);
      Observation o;
      o.row = std::size_t(row);
      o.value = mean + def.error.draw(rng);
      if (s2 && o.value > kCensorThreshold) {
        o.censor = CensorKind::Right;
        o.lower = kCensorThreshold;
        o.value = 0.0;
        ++censored;
      }
      g.observations.push_back(o);
    }
  }
  g.censored_fraction = double(censored) / double(n);
  return g;
}

std::vector<std::string> default_models(const std::string& scenario)
{
  const std::string& fam = find_scenario(scenario).family;
  if (fam == "S1")
    return {"general", "normal"};
  if (fam == "S2")
    return {"m1", "m2", "m3", "m4"};
  return {"tpn", "normal"};
}

ModelSpec make_model(const std::string& model, const GeneratedData& g)
{
  ErrorFamily err;
  RandomEffectsLaw re;
  PriorSpec prior = base_prior();
  const ProperPrior location = ProperPrior::uniform(-100.0, 100.0);
  if (model == "general") {
    err.mixing = MixingKind::Gamma;
    prior.delta_eps = ProperPrior::df_prior();
    re.marginals = {MarginalKind::TwoPieceNormal};
    prior.hyper.emplace("mu[0]", location);
    prior.hyper.emplace("gamma[0]", ProperPrior::uniform(-1.0, 1.0));
  } else if (model == "normal") {
    re.marginals = {MarginalKind::Normal};
    prior.hyper.emplace("mu[0]", location);
  } else if (model == "tpn") {
    err.skew = SkewParameterisation::EpsilonSkew;
    prior.gamma_eps = ProperPrior::uniform(-1.0, 1.0);
    re.marginals = {MarginalKind::TwoPieceNormal};
    prior.hyper.emplace("mu[0]", location);
    prior.hyper.emplace("gamma[0]", ProperPrior::uniform(-1.0, 1.0));
  } else if (model == "m1" || model == "m2" || model == "m3" || model == "m4") {
    const bool t_err = model == "m2" || model == "m4";
    const bool t_re = model == "m3" || model == "m4";
    if (t_err) {
      err.mixing = MixingKind::Gamma;
      prior.delta_eps = ProperPrior::df_prior();
    }
    re.marginals = {t_re ? MarginalKind::StudentT : MarginalKind::Normal};
    prior.hyper.emplace("mu[0]", ProperPrior::point_mass(0.0));
    if (t_re)
      prior.hyper.emplace("delta[0]", ProperPrior::df_prior());
  } else {
    fail(ErrorCode::InvalidArgument, "unknown model '" + model + "'");
  }
  return build_model(g.data, g.observations, err, re, prior);
}

std::string model_config_text(const std::string& model)
{
  std::string error = "[error]\nmixing = normal\n";
  std::string re = "[random_effects]\nmarginals = normal\n";
  std::string priors = "[priors]\nb = 0\nbeta = flat\nsigma = half_cauchy(1)\n";
  if (model == "general") {
    error = "[error]\nmixing = student_t\n";
    re = "[random_effects]\nmarginals = two_piece_normal\n";
    priors += "delta_eps = df(1.2)\nmu = uniform(-100,100)\ngamma = uniform(-1,1)\n";
  } else if (model == "normal") {
    priors += "mu = uniform(-100,100)\n";
  } else if (model == "tpn") {
    error = "[error]\nmixing = normal\nskew = epsilon_skew\n";
    re = "[random_effects]\nmarginals = two_piece_normal\n";
    priors += "gamma_eps = uniform(-1,1)\nmu = uniform(-100,100)\ngamma = uniform(-1,1)\n";
  } else if (model == "m1" || model == "m2" || model == "m3" || model == "m4") {
    const bool t_err = model == "m2" || model == "m4";
    const bool t_re = model == "m3" || model == "m4";
    if (t_err) {
      error = "[error]\nmixing = student_t\n";
      priors += "delta_eps = df(1.2)\n";
    }
    if (t_re) {
      re = "[random_effects]\nmarginals = student_t\n";
      priors += "delta = df(1.2)\n";
    }
    priors += "mu = fixed(0)\n";
  } else {
    fail(ErrorCode::InvalidArgument, "unknown model '" + model + "'");
  }
  return "# model '" + model + "'\n[model]\nmode = longitudinal\n" + error + re + priors;
}

const AggregateRow* StudyResult::row(const std::string& model, const std::string& parameter) const
{
  for (const auto& r : rows)
    if (r.model == model && r.parameter == parameter)
      return &r;
  return nullptr;
}

namespace {

ModelFit fit_one(const std::string& model, const GeneratedData& g, SamplerConfig cfg)
{
  ModelFit fit;
  fit.model = model;
  try {
    const ModelSpec spec = make_model(model, g);
    const PosteriorSample sample = run_chain(spec, cfg);
    const ChainDiagnostics diag = diagnostics(sample);
    for (const auto& p : diag.parameters)
      if (parse_slot(p.name).base != "u")
        fit.summaries[p.name] = p;
    const SelectionReport sel = select(sample, spec, default_hypotheses(spec));
    fit.odds_delta_gt_10 = sel.odds_delta_gt_10;
    for (const auto& [k, v] : sel.bayes_factors)
      fit.log_bayes_factors[k] = v.log_bf;
    fit.lpml = sel.lpml.lpml;
    fit.ok = true;
  } catch (const std::exception& e) {
    fit.ok = false;
    fit.error = e.what();
  }
  return fit;
}

double median_of(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, 0.5);
}

} // namespace

StudyResult run_study(const std::string& scenario, const StudyConfig& config)
{
  const std::size_t scen_index =
    std::size_t(std::find(scenario_ids().begin(), scenario_ids().end(), scenario) - scenario_ids().begin());
  find_scenario(scenario);
  StudyResult out;
  out.scenario = scenario;
  out.config = config;
  out.models = config.models.empty() ? default_models(scenario) : config.models;
  out.replicates.resize(config.replicates);

  const std::uint64_t base = mix_seed(config.master_seed, string_hash(scenario) + scen_index);
  auto work = [&](std::size_t k) {
    ReplicateResult& rr = out.replicates[k];
    rr.index = k;
    rr.seed = mix_seed(base, k);
    const GeneratedData g = generate(scenario, rr.seed, config.subjects);
    rr.censored_fraction = g.censored_fraction;
    for (std::size_t m = 0; m < out.models.size(); ++m) {
      SamplerConfig cfg = config.sampler;
      cfg.seed = mix_seed(rr.seed, m + 1);
      rr.fits.push_back(fit_one(out.models[m], g, cfg));
    }
  };

  const std::size_t nthreads = std::max<std::size_t>(1, std::min(config.threads, config.replicates));
  if (nthreads == 1) {
    for (std::size_t k = 0; k < config.replicates; ++k)
      work(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < config.replicates; k = next++)
          work(k);
      });
    for (auto& th : pool)
      th.join();
  }

  // Aggregation in replicate order.
  std::vector<double> cens;
  for (const auto& rr : out.replicates)
    cens.push_back(rr.censored_fraction);
  if (!cens.empty())
    out.median_censored_fraction = median_of(cens);

  for (std::size_t m = 0; m < out.models.size(); ++m) {
    const std::string& model = out.models[m];
    std::map<std::string, std::vector<ParameterSummary>> by_param;
    std::vector<std::string> order;
    std::vector<double> odds;
    std::map<std::string, std::vector<double>> bfs;
    std::size_t failed = 0;
    for (const auto& rr : out.replicates) {
      const ModelFit& f = rr.fits[m];
      if (!f.ok) {
        ++failed;
        std::fprintf(stderr, "replicate %zu model %s failed: %s\n", rr.index, model.c_str(), f.error.c_str());
        continue;
      }
      for (const auto& [name, s] : f.summaries) {
        if (!by_param.count(name))
          order.push_back(name);
        by_param[name].push_back(s);
      }
      if (f.odds_delta_gt_10)
        odds.push_back(*f.odds_delta_gt_10);
      for (const auto& [h, v] : f.log_bayes_factors)
        bfs[h].push_back(v);
    }
    out.failures[model] = failed;
    // free_scalar_slots order within a model is stable; sort names for tables
    std::sort(order.begin(), order.end());
    for (const auto& name : order) {
      const auto& v = by_param[name];
      std::vector<double> med, lo, hi;
      for (const auto& s : v) {
        med.push_back(s.median);
        lo.push_back(s.lower);
        hi.push_back(s.upper);
      }
      AggregateRow row;
      row.model = model;
      row.parameter = name;
      row.count = v.size();
      std::sort(med.begin(), med.end());
      row.median = sorted_quantile(med, 0.5);
      row.lo_quantile = sorted_quantile(med, 0.025);
      row.hi_quantile = sorted_quantile(med, 0.975);
      row.lo_endpoint = median_of(lo);
      row.hi_endpoint = median_of(hi);
      out.rows.push_back(row);
    }
    if (!odds.empty())
      out.median_odds[model] = median_odds(odds);
    for (auto& [h, v] : bfs)
      out.median_log_bf[model + ":" + h] = median_of(v);
  }

  for (const auto& rr : out.replicates) {
    std::size_t best = out.models.size();
    for (std::size_t m = 0; m < rr.fits.size(); ++m)
      if (rr.fits[m].ok && (best == out.models.size() || rr.fits[m].lpml > rr.fits[best].lpml))
        best = m;
    if (best < out.models.size())
      ++out.lpml_wins[out.models[best]];
  }
  return out;
}

std::string study_table_text(const StudyResult& s)
{
  std::ostringstream os;
  char buf[256];
  os << "scenario " << s.scenario << ": " << scenario_description(s.scenario) << "\n";
  os << "replicates " << s.config.replicates << ", subjects " << s.config.subjects << ", burn-in "
     << s.config.sampler.burn_in << ", thin " << s.config.sampler.thin << ", keep " << s.config.sampler.keep << "\n";
  if (s.median_censored_fraction > 0.0) {
    std::snprintf(buf, sizeof buf, "median censored fraction %.3f\n", s.median_censored_fraction);
    os << buf;
  }
  for (const auto& model : s.models) {
    os << "\nmodel " << model;
    if (auto it = s.failures.find(model); it != s.failures.end() && it->second > 0)
      os << " (" << it->second << " failed replicates excluded)";
    os << "\n";
    std::snprintf(buf, sizeof buf, "  %-12s %26s %26s\n", "parameter", "median (quantiles of medians)",
                  "(median endpoints)");
    os << buf;
    for (const auto& r : s.rows) {
      if (r.model != model)
        continue;
      std::snprintf(buf, sizeof buf, "  %-12s %8.3f (%7.3f,%8.3f)   (%7.3f,%8.3f)\n", r.parameter.c_str(), r.median,
                    r.lo_quantile, r.hi_quantile, r.lo_endpoint, r.hi_endpoint);
      os << buf;
    }
    for (const auto& [k, v] : s.median_log_bf) {
      if (k.rfind(model + ":", 0) != 0)
        continue;
      std::snprintf(buf, sizeof buf, "  median BF %-12s %.3g\n", k.substr(model.size() + 1).c_str(), std::exp(v));
      os << buf;
    }
    if (auto it = s.median_odds.find(model); it != s.median_odds.end()) {
      std::snprintf(buf, sizeof buf, "  median odds delta_eps>10 %.3g\n", it->second);
      os << buf;
    }
    if (auto it = s.lpml_wins.find(model); it != s.lpml_wins.end())
      os << "  highest LPML in " << it->second << " replicates\n";
  }
  return os.str();
}

std::string study_table_csv(const StudyResult& s)
{
  std::ostringstream os;
  os.precision(10);
  os << "scenario,model,parameter,count,median,q025_of_medians,q975_of_medians,median_lower,median_upper\n";
  for (const auto& r : s.rows)
    os << s.scenario << ',' << r.model << ',' << r.parameter << ',' << r.count << ',' << r.median << ','
       << r.lo_quantile << ',' << r.hi_quantile << ',' << r.lo_endpoint << ',' << r.hi_endpoint << '\n';
  return os.str();
}

} // namespace flexlmm
