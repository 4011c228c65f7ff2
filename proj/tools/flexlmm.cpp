// Command-line front end: check-propriety, fit, select, simulate, demo-pathology.
// Exit status: 0 success, 2 propriety refusal, 1 any other error.

#include "flexlmm/error.hpp"
#include "flexlmm/io.hpp"
#include "flexlmm/pathology.hpp"
#include "flexlmm/propriety.hpp"
#include "flexlmm/sampler.hpp"
#include "flexlmm/selection.hpp"
#include "flexlmm/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace flexlmm;

namespace {

constexpr int kExitRefused = 2;
constexpr int kExitError = 1;

std::string now_utc()
{
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Loaded
{
  Dataset data;
  RunConfig config;
  ModelSpec spec;
  std::string data_bytes;
};

Loaded load(const std::string& data_path, const std::string& config_text)
{
  Loaded l{.data = {}, .config = parse_config(config_text), .spec = {}, .data_bytes = read_file(data_path)};
  l.data = load_dataset(data_path, l.config.mode == Mode::Meaft);
  l.spec = build_model(l.data, l.config);
  return l;
}

int cmd_check(const std::string& data_path, const std::string& config_path, const std::string& json_path)
{
  const Loaded l = load(data_path, read_file(config_path));
  const ProprietyReport rep = check_all(l.spec);
  std::cout << propriety_text(rep);
  if (!json_path.empty())
    write_file(json_path, propriety_json(rep) + "\n");
  return rep.overall == Overall::Proper ? 0 : kExitRefused;
}

struct FitArgs
{
  std::string data;
  std::string config;
  std::string out;
  std::string replay;
  bool override_propriety = false;
  long long seed = -1;
};

int cmd_fit(const FitArgs& a)
{
  RunManifest m;
  std::string config_text, data_path;
  if (!a.replay.empty()) {
    m = parse_manifest(read_file(a.replay));
    config_text = m.config_text;
    data_path = a.data.empty() ? m.data_path : a.data;
  } else {
    if (a.data.empty() || a.config.empty())
      fail(ErrorCode::InvalidArgument, "fit needs a data file and a config file (or --replay)");
    config_text = read_file(a.config);
    data_path = a.data;
  }
  Loaded l = load(data_path, config_text);
  SamplerConfig cfg = a.replay.empty() ? l.config.sampler : m.sampler;
  if (a.seed >= 0)
    cfg.seed = std::uint64_t(a.seed);
  if (a.override_propriety)
    cfg.override_propriety = true;

  const std::string data_hash = fnv1a_hex(l.data_bytes);
  if (!a.replay.empty() && data_hash != m.data_hash)
    fail(ErrorCode::InvalidArgument, "data file " + data_path + " does not match the manifest hash");

  const ProprietyReport rep = check_all(l.spec);
  std::cout << propriety_text(rep);
  if (rep.overall != Overall::Proper && !cfg.override_propriety) {
    std::cerr << "refusing to sample: posterior is " << to_string(rep.overall) << "; " << rep.reason()
              << "\n(use --override-propriety to sample anyway)\n";
    return kExitRefused;
  }

  fs::create_directories(a.out);
  const PosteriorSample sample = run_chain(l.spec, cfg);
  const std::string csv = samples_csv(sample);
  write_file((fs::path(a.out) / "samples.csv").string(), csv);
  const std::string summary = diagnostics_text(diagnostics(sample));
  write_file((fs::path(a.out) / "summary.txt").string(), summary);
  write_file((fs::path(a.out) / "propriety.json").string(), propriety_json(rep) + "\n");

  RunManifest out;
  out.created = now_utc();
  out.data_path = fs::absolute(data_path).string();
  out.data_hash = data_hash;
  out.config_text = config_text;
  out.spec_hash = fnv1a_hex(l.data_bytes + "\n--\n" + config_text);
  out.sampler = cfg;
  out.verdict = to_string(rep.overall);
  out.samples_hash = fnv1a_hex(csv);
  write_file((fs::path(a.out) / "manifest.json").string(), manifest_json(out) + "\n");

  std::cout << "\n" << summary;
  if (sample.floored_terms > 0)
    std::cout << "warning: " << sample.floored_terms << " censored terms hit the probability floor\n";
  std::cout << "wrote " << sample.size() << " draws to " << a.out << "\n";
  if (!a.replay.empty()) {
    if (out.samples_hash != m.samples_hash) {
      std::cerr << "replay differs from the recorded run (" << out.samples_hash << " vs " << m.samples_hash << ")\n";
      return kExitError;
    }
    std::cout << "replay identical to the recorded run\n";
  }
  return 0;
}

int cmd_select(const std::string& samples_path, const std::string& data_path, const std::string& config_path,
               const std::vector<std::string>& hyps, const std::string& json_path)
{
  const Loaded l = load(data_path, read_file(config_path));
  const PosteriorSample sample = read_samples_csv(read_file(samples_path), neutral_parameters(l.spec));
  std::vector<Hypothesis> hs;
  for (const auto& h : hyps)
    hs.push_back(parse_hypothesis(h));
  if (hs.empty())
    hs = default_hypotheses(l.spec);
  const SelectionReport rep = select(sample, l.spec, hs);
  std::cout << selection_text(rep);
  if (!json_path.empty())
    write_file(json_path, selection_json(rep) + "\n");
  return 0;
}

struct SimArgs
{
  std::string scenario;
  StudyConfig study;
  std::string models;
  std::string out;
  std::string write_data;
  std::string write_config;
};

int cmd_simulate(SimArgs a)
{
  if (!a.models.empty()) {
    std::stringstream ss(a.models);
    std::string m;
    while (std::getline(ss, m, ','))
      a.study.models.push_back(m);
  }
  if (!a.write_data.empty() || !a.write_config.empty()) {
    if (!a.write_data.empty()) {
      const GeneratedData g = generate(a.scenario, a.study.master_seed, a.study.subjects);
      save_dataset(a.write_data, make_dataset(g.data, g.observations));
      std::cout << "wrote " << g.observations.size() << " rows (" << g.censored_fraction * 100.0
                << "% censored) to " << a.write_data << "\n";
    }
    if (!a.write_config.empty()) {
      const auto models = a.study.models.empty() ? default_models(a.scenario) : a.study.models;
      write_file(a.write_config, model_config_text(models.front()));
    }
    return 0;
  }
  const StudyResult s = run_study(a.scenario, a.study);
  const std::string text = study_table_text(s);
  std::cout << text;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file((fs::path(a.out) / "study.txt").string(), text);
    write_file((fs::path(a.out) / "study.csv").string(), study_table_csv(s));
    nlohmann::json j;
    j["software"] = std::string("flexlmm ") + kVersion;
    j["created"] = now_utc();
    j["scenario"] = a.scenario;
    j["master_seed"] = a.study.master_seed;
    j["subjects"] = a.study.subjects;
    j["sampler"] = {{"burn_in", a.study.sampler.burn_in}, {"thin", a.study.sampler.thin}, {"keep", a.study.sampler.keep}};
    j["models"] = s.models;
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : s.replicates) {
      nlohmann::json fits = nlohmann::json::array();
      for (const auto& f : r.fits)
        fits.push_back({{"model", f.model}, {"ok", f.ok}, {"error", f.error}});
      reps.push_back({{"index", r.index}, {"seed", r.seed}, {"censored_fraction", r.censored_fraction}, {"fits", fits}});
    }
    j["replicates"] = reps;
    write_file((fs::path(a.out) / "manifest.json").string(), j.dump(2) + "\n");
  }
  return 0;
}

int cmd_pathology(std::size_t nodes)
{
  PathologyInput in = default_pathology_input();
  if (nodes > 0)
    in.nodes = nodes;
  const PathologyReport r = demo_single_mixer_factorisation(in);
  std::printf("tiny random-intercept model, n=%zu, b=%g\n", in.design.n(), r.b);
  std::printf("first mixer %s with delta prior %s, second %s with %s\n", to_string(in.first.kind),
              in.first.delta_prior.describe().c_str(), to_string(in.second.kind),
              in.second.delta_prior.describe().c_str());
  std::printf("prior-only factors %.10g and %.10g, ratio %.10g\n\n", r.factor_first, r.factor_second, r.bf_prior_only);
  std::printf("%-8s %16s %16s %12s %16s %14s\n", "dataset", "m(y)", "single BF", "fact. err", "per-obs BF", "");
  for (std::size_t k = 0; k < r.datasets.size(); ++k) {
    const auto& d = r.datasets[k];
    std::printf("%-8zu %16.8g %16.10g %12.2e %16.10g\n", k + 1, d.normal_marginal, d.bf_single,
                d.factorisation_error, d.bf_per_observation);
  }
  std::printf("\nsingle-mixer BF spread across datasets:        %.3e\n", r.single_bf_spread());
  std::printf("per-observation-mixer BF spread across datasets: %.3e\n", r.per_observation_bf_spread());
  std::printf("with one shared mixer the Bayes factor does not depend on the data\n");
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Bayesian linear mixed models with flexible errors and random effects"};
  app.set_version_flag("--version", std::string("flexlmm ") + kVersion);
  app.require_subcommand(1);

  std::string data, config, json;
  auto* check = app.add_subcommand("check-propriety", "Check sufficient conditions for posterior propriety");
  check->add_option("data", data, "Data CSV")->required();
  check->add_option("config", config, "Model config")->required();
  check->add_option("--json", json, "Also write the report as JSON");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Check propriety and sample the posterior");
  fitc->add_option("data", fit.data, "Data CSV");
  fitc->add_option("config", fit.config, "Model config");
  fitc->add_option("--out,-o", fit.out, "Output directory")->required();
  fitc->add_option("--replay", fit.replay, "Re-run from a manifest.json and compare the draws");
  fitc->add_option("--seed", fit.seed, "Override the sampler seed");
  fitc->add_flag("--override-propriety", fit.override_propriety, "Sample even without a propriety guarantee");

  std::string samples;
  std::vector<std::string> hyps;
  auto* sel = app.add_subcommand("select", "Savage-Dickey Bayes factors, tail odds and LPML from saved draws");
  sel->add_option("samples", samples, "samples.csv written by fit")->required();
  sel->add_option("data", data, "Data CSV")->required();
  sel->add_option("config", config, "Model config")->required();
  sel->add_option("--hypothesis,-H", hyps, "Point hypothesis name=value (repeatable)");
  sel->add_option("--json", json, "Also write the report as JSON");

  SimArgs sim;
  auto* simc = app.add_subcommand("simulate", "Run a simulation study on one scenario");
  simc->add_option("scenario", sim.scenario, "Scenario id")->required()->check(CLI::IsMember(scenario_ids()));
  simc->add_option("--replicates", sim.study.replicates, "Number of datasets")->capture_default_str();
  simc->add_option("--subjects", sim.study.subjects, "Subjects per dataset (0: 100)")->capture_default_str();
  simc->add_option("--burn-in", sim.study.sampler.burn_in, "Burn-in iterations")->capture_default_str();
  simc->add_option("--thin", sim.study.sampler.thin, "Thinning interval")->capture_default_str();
  simc->add_option("--keep", sim.study.sampler.keep, "Retained draws")->capture_default_str();
  simc->add_option("--seed", sim.study.master_seed, "Master seed")->capture_default_str();
  simc->add_option("--threads", sim.study.threads, "Worker threads")->capture_default_str();
  simc->add_option("--models", sim.models, "Comma-separated models (default: the scenario family's)");
  simc->add_option("--out,-o", sim.out, "Directory for study.txt, study.csv and manifest.json");
  simc->add_option("--write-data", sim.write_data, "Only write one generated dataset (seed = --seed) to this CSV");
  simc->add_option("--write-config", sim.write_config, "Only write the config of the first model to this file");

  std::size_t nodes = 0;
  auto* demo = app.add_subcommand("demo-pathology", "Single shared mixer: data-free Bayes factors");
  demo->add_option("--nodes", nodes, "Gauss nodes per mixing variable in the per-observation model");

  CLI11_PARSE(app, argc, argv);
  try {
    if (check->parsed())
      return cmd_check(data, config, json);
    if (fitc->parsed()) {
      if (fit.replay.empty() && fit.config.empty())
        throw CLI::RequiredError("fit needs data and config, or --replay");
      return cmd_fit(fit);
    }
    if (sel->parsed())
      return cmd_select(samples, data, config, hyps, json);
    if (simc->parsed())
      return cmd_simulate(sim);
    if (demo->parsed())
      return cmd_pathology(nodes);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::ProprietyRefused ? kExitRefused : kExitError;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
