#include "flexlmm/io.hpp"

#include "flexlmm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace flexlmm {

namespace {

std::string trim(const std::string& s)
{
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
    ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
    --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string lower(std::string s)
{
  for (auto& c : s)
    c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "na"; }

double parse_number(const std::string& cell, const std::string& what)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size())
      return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::SchemaError, what + ": '" + cell + "' is not a number");
}

std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CensorKind parse_censor(const std::string& s, const std::string& where)
{
  const std::string v = lower(s);
  if (v == "exact")
    return CensorKind::Exact;
  if (v == "right")
    return CensorKind::Right;
  if (v == "left")
    return CensorKind::Left;
  if (v == "interval")
    return CensorKind::Interval;
  fail(ErrorCode::SchemaError, where + ": censor code '" + s + "' is not exact, right, left or interval");
}

} // namespace

// ---------------------------------------------------------------------------
// Data files

Dataset read_dataset(std::istream& in, bool survival_times)
{
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split(line, ',');
      break;
    }
  }
  if (header.empty())
    fail(ErrorCode::SchemaError, "data file has no header");

  int c_subject = -1, c_censor = -1, c_y = -1, c_lo = -1, c_hi = -1;
  std::vector<int> cx, cz;
  Dataset ds;
  for (int j = 0; j < int(header.size()); ++j) {
    const std::string h = lower(header[std::size_t(j)]);
    if (h == "subject")
      c_subject = j;
    else if (h == "censor")
      c_censor = j;
    else if (h == "y")
      c_y = j;
    else if (h == "lower")
      c_lo = j;
    else if (h == "upper")
      c_hi = j;
    else if (h.rfind("x_", 0) == 0) {
      cx.push_back(j);
      ds.x_names.push_back(header[std::size_t(j)]);
    } else if (h.rfind("z_", 0) == 0) {
      cz.push_back(j);
      ds.z_names.push_back(header[std::size_t(j)]);
    } else
      fail(ErrorCode::SchemaError, "unknown column '" + header[std::size_t(j)] + "'");
  }
  if (c_subject < 0)
    fail(ErrorCode::SchemaError, "missing column 'subject'");
  if (c_y < 0 && c_lo < 0 && c_hi < 0)
    fail(ErrorCode::SchemaError, "need a 'y' column or interval bounds 'lower'/'upper'");

  std::map<std::string, std::size_t> ids;
  std::vector<std::vector<double>> xs, zs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    const auto cells = split(line, ',');
    const std::string where = "line " + std::to_string(lineno);
    if (cells.size() != header.size())
      fail(ErrorCode::SchemaError, where + ": expected " + std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
    auto cell = [&](int c) -> const std::string& {
      static const std::string empty;
      return c < 0 ? empty : cells[std::size_t(c)];
    };
    const std::string& sid = cell(c_subject);
    if (missing(sid))
      fail(ErrorCode::SchemaError, where + ": empty subject");
    auto [it, fresh] = ids.emplace(sid, ids.size());
    if (fresh)
      ds.subject_ids.push_back(sid);
    ds.data.subject.push_back(it->second);

    Observation o;
    o.row = ds.observations.size();
    o.censor = c_censor < 0 || missing(cell(c_censor)) ? CensorKind::Exact : parse_censor(cell(c_censor), where);
    auto need = [&](int c, const char* name) {
      if (missing(cell(c)))
        fail(ErrorCode::SchemaError, where + ": " + to_string(o.censor) + " row needs '" + name + "'");
      return parse_number(cell(c), where + " " + name);
    };
    switch (o.censor) {
      case CensorKind::Exact: o.value = need(c_y, "y"); break;
      case CensorKind::Right: o.lower = need(c_lo, "lower"); o.upper = std::numeric_limits<double>::infinity(); break;
      case CensorKind::Left: o.upper = need(c_hi, "upper"); o.lower = -std::numeric_limits<double>::infinity(); break;
      case CensorKind::Interval:
        o.lower = need(c_lo, "lower");
        o.upper = need(c_hi, "upper");
        if (!(o.lower < o.upper))
          fail(ErrorCode::UnorderedInterval, where + ": interval lower bound is not below the upper bound");
        break;
    }
    if (survival_times) {
      const bool bad = (o.censor == CensorKind::Exact && !(o.value > 0.0)) ||
                       ((o.censor == CensorKind::Right || o.censor == CensorKind::Interval) && !(o.lower > 0.0)) ||
                       (o.censor == CensorKind::Left && !(o.upper > 0.0));
      if (bad)
        fail(ErrorCode::NonPositiveSurvivalTime, where + ": survival times must be positive");
    }
    ds.observations.push_back(o);

    std::vector<double> xr, zr;
    for (int c : cx)
      xr.push_back(parse_number(cell(c), where + " " + header[std::size_t(c)]));
    for (int c : cz)
      zr.push_back(parse_number(cell(c), where + " " + header[std::size_t(c)]));
    xs.push_back(std::move(xr));
    zs.push_back(std::move(zr));
  }
  const std::size_t n = ds.observations.size();
  if (n == 0)
    fail(ErrorCode::EmptyData, "data file has no rows");

  const std::size_t q = cz.empty() ? 1 : cz.size();
  const std::size_t r = ds.subject_ids.size();
  ds.data.q = q;
  ds.data.r = r;
  ds.data.X.resize(Eigen::Index(n), Eigen::Index(cx.size()));
  ds.data.Z = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(q * r));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < cx.size(); ++k)
      ds.data.X(Eigen::Index(i), Eigen::Index(k)) = xs[i][k];
    const std::size_t s = ds.data.subject[i];
    for (std::size_t k = 0; k < q; ++k)
      ds.data.Z(Eigen::Index(i), Eigen::Index(s * q + k)) = cz.empty() ? 1.0 : zs[i][k];
  }
  return ds;
}

Dataset load_dataset(const std::string& path, bool survival_times)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::SchemaError, "cannot open data file '" + path + "'");
  return read_dataset(in, survival_times);
}

void write_dataset(std::ostream& out, const Dataset& ds)
{
  const std::size_t n = ds.observations.size();
  const std::size_t p = ds.data.p(), q = ds.data.q;
  out << "subject,censor,y,lower,upper";
  for (std::size_t k = 0; k < p; ++k)
    out << ',' << (k < ds.x_names.size() ? ds.x_names[k] : "x_" + std::to_string(k + 1));
  for (std::size_t k = 0; k < q; ++k)
    out << ',' << (k < ds.z_names.size() ? ds.z_names[k] : "z_" + std::to_string(k + 1));
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = ds.observations[i];
    const std::size_t s = ds.data.subject[i];
    out << (s < ds.subject_ids.size() ? ds.subject_ids[s] : std::to_string(s + 1)) << ',' << to_string(o.censor) << ',';
    out << (o.censor == CensorKind::Exact ? fmt17(o.value) : "") << ',';
    out << (o.censor == CensorKind::Right || o.censor == CensorKind::Interval ? fmt17(o.lower) : "") << ',';
    out << (o.censor == CensorKind::Left || o.censor == CensorKind::Interval ? fmt17(o.upper) : "");
    for (std::size_t k = 0; k < p; ++k)
      out << ',' << fmt17(ds.data.X(Eigen::Index(i), Eigen::Index(k)));
    for (std::size_t k = 0; k < q; ++k)
      out << ',' << fmt17(ds.data.Z(Eigen::Index(i), Eigen::Index(s * q + k)));
    out << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& ds)
{
  std::ostringstream os;
  write_dataset(os, ds);
  write_file(path, os.str());
}

Dataset make_dataset(const DesignData& data, const std::vector<Observation>& observations)
{
  Dataset ds;
  ds.data = data;
  ds.observations = observations;
  for (std::size_t s = 0; s < data.r; ++s)
    ds.subject_ids.push_back(std::to_string(s + 1));
  if (data.q > 0) {
    // z columns only when the design is not a plain random intercept
    bool intercept = data.q == 1;
    for (std::size_t i = 0; intercept && i < data.n(); ++i)
      for (Eigen::Index c = 0; c < data.Z.cols(); ++c)
        if (data.Z(Eigen::Index(i), c) != (std::size_t(c) == data.subject[i] ? 1.0 : 0.0))
          intercept = false;
    if (!intercept)
      for (std::size_t k = 0; k < data.q; ++k)
        ds.z_names.push_back("z_" + std::to_string(k + 1));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

MixingKind parse_mixing(const std::string& v)
{
  if (v == "normal" || v == "none" || v == "point_mass")
    return MixingKind::PointMass;
  if (v == "gamma" || v == "student_t")
    return MixingKind::Gamma;
  if (v == "beta")
    return MixingKind::Beta;
  if (v == "birnbaum_saunders")
    return MixingKind::BirnbaumSaunders;
  fail(ErrorCode::SchemaError, "error.mixing: unknown value '" + v + "'");
}

MarginalKind parse_marginal(const std::string& v)
{
  if (v == "normal")
    return MarginalKind::Normal;
  if (v == "student_t")
    return MarginalKind::StudentT;
  if (v == "two_piece_normal")
    return MarginalKind::TwoPieceNormal;
  if (v == "two_piece_sinh_arcsinh")
    return MarginalKind::TwoPieceSinhArcsinh;
  fail(ErrorCode::SchemaError, "random_effects.marginals: unknown value '" + v + "'");
}

bool parse_bool(const std::string& v, const std::string& key)
{
  if (v == "true" || v == "yes" || v == "1")
    return true;
  if (v == "false" || v == "no" || v == "0")
    return false;
  fail(ErrorCode::SchemaError, key + ": expected true or false, got '" + v + "'");
}

std::size_t parse_count(const std::string& v, const std::string& key)
{
  const double d = parse_number(v, key);
  if (d < 0 || d != std::floor(d))
    fail(ErrorCode::SchemaError, key + ": expected a non-negative integer");
  return std::size_t(d);
}

std::string unquote(const std::string& v)
{
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return v.substr(1, v.size() - 2);
  return v;
}

const std::map<std::string, std::string>& default_hyper()
{
  static const std::map<std::string, std::string> d = {
    {"mu", "uniform(-100,100)"}, {"sigma", "half_cauchy(1)"}, {"gamma", "uniform(-1,1)"},
    {"delta", "df(1.2)"},        {"rho", "spearman()"},
  };
  return d;
}

} // namespace

RunConfig parse_config(const std::string& text)
{
  RunConfig cfg;
  cfg.text = text;
  std::map<std::string, std::string> priors; // raw text by key
  std::string section;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "config line " + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorCode::SchemaError, where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {"model", "error", "random_effects", "priors", "sampler"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        fail(ErrorCode::SchemaError, where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::SchemaError, where + ": expected key = value");
    const std::string key = unquote(trim(line.substr(0, eq)));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    const std::string full = section + "." + key;
    const std::string v = lower(value);

    if (section == "model") {
      if (key == "mode") {
        if (v == "longitudinal")
          cfg.mode = Mode::Longitudinal;
        else if (v == "meaft")
          cfg.mode = Mode::Meaft;
        else
          fail(ErrorCode::SchemaError, full + ": expected longitudinal or meaft");
      } else if (key == "log_base") {
        cfg.log_base = parse_number(value, full);
      } else {
        fail(ErrorCode::SchemaError, where + ": unknown key " + full);
      }
    } else if (section == "error") {
      if (key == "mixing")
        cfg.error.mixing = parse_mixing(v);
      else if (key == "skew") {
        if (v == "none")
          cfg.error.skew.reset();
        else if (v == "epsilon_skew")
          cfg.error.skew = SkewParameterisation::EpsilonSkew;
        else if (v == "inverse_scale_factors")
          cfg.error.skew = SkewParameterisation::InverseScaleFactors;
        else
          fail(ErrorCode::SchemaError, full + ": expected none, epsilon_skew or inverse_scale_factors");
      } else
        fail(ErrorCode::SchemaError, where + ": unknown key " + full);
    } else if (section == "random_effects") {
      if (key == "marginals") {
        cfg.random_effects.marginals.clear();
        for (const auto& m : split(v, ','))
          cfg.random_effects.marginals.push_back(parse_marginal(m));
      } else if (key == "copula") {
        if (v == "gaussian")
          cfg.random_effects.gaussian_copula = true;
        else if (v == "independent")
          cfg.random_effects.gaussian_copula = false;
        else
          fail(ErrorCode::SchemaError, full + ": expected gaussian or independent");
      } else if (key == "truncate_positive") {
        cfg.random_effects.truncate_positive = parse_bool(v, full);
      } else
        fail(ErrorCode::SchemaError, where + ": unknown key " + full);
    } else if (section == "priors") {
      if (key == "b") {
        cfg.prior.b = parse_number(value, full);
      } else if (key == "beta") {
        if (v == "flat")
          cfg.prior.beta = BetaPrior{};
        else {
          const ProperPrior p = parse_prior(value);
          if (p.kind() != ProperPrior::Kind::UniformWindow)
            fail(ErrorCode::SchemaError, full + ": expected flat or uniform(lo,hi)");
          cfg.prior.beta = BetaPrior{false, p.first(), p.second()};
        }
      } else if (key == "sigma_eps") {
        if (v == "improper")
          cfg.prior.sigma_eps_fixed.reset();
        else {
          const ProperPrior p = parse_prior(value);
          if (!p.is_point_mass() || !(p.point() > 0.0))
            fail(ErrorCode::SchemaError, full + ": expected improper or fixed(v) with v > 0");
          cfg.prior.sigma_eps_fixed = p.point();
        }
      } else {
        if (priors.count(key))
          fail(ErrorCode::SchemaError, where + ": prior for '" + key + "' given twice");
        priors[key] = value;
      }
    } else if (section == "sampler") {
      if (key == "burn_in")
        cfg.sampler.burn_in = parse_count(value, full);
      else if (key == "thin")
        cfg.sampler.thin = parse_count(value, full);
      else if (key == "keep")
        cfg.sampler.keep = parse_count(value, full);
      else if (key == "adapt_batch")
        cfg.sampler.adapt_batch = parse_count(value, full);
      else if (key == "target_accept")
        cfg.sampler.target_accept = parse_number(value, full);
      else if (key == "seed")
        cfg.sampler.seed = std::uint64_t(parse_count(value, full));
      else
        fail(ErrorCode::SchemaError, where + ": unknown key " + full);
    } else {
      fail(ErrorCode::SchemaError, where + ": key outside any section");
    }
  }
  if (cfg.random_effects.marginals.empty())
    cfg.random_effects.marginals = {MarginalKind::Normal};

  // Error-shape priors.
  if (cfg.error.has_delta())
    cfg.prior.delta_eps = parse_prior(priors.count("delta_eps") ? priors["delta_eps"] : "df(1.2)");
  else if (priors.count("delta_eps"))
    fail(ErrorCode::SchemaError, "priors.delta_eps given but the error law has no shape parameter");
  if (cfg.error.skew) {
    if (priors.count("gamma_eps"))
      cfg.prior.gamma_eps = parse_prior(priors["gamma_eps"]);
    else if (*cfg.error.skew == SkewParameterisation::EpsilonSkew)
      cfg.prior.gamma_eps = ProperPrior::uniform(-1.0, 1.0);
    else
      fail(ErrorCode::InvalidPrior, "priors.gamma_eps is required with inverse_scale_factors");
  } else if (priors.count("gamma_eps")) {
    fail(ErrorCode::SchemaError, "priors.gamma_eps given but the error law is symmetric");
  }
  priors.erase("delta_eps");
  priors.erase("gamma_eps");

  // Random-effects hyperpriors: full slot name, then bare name, then default.
  std::vector<std::string> used;
  for (const auto& slot : required_hyper_slots(cfg.random_effects)) {
    const std::string base = parse_slot(slot).base;
    std::string text_value;
    if (priors.count(slot)) {
      text_value = priors[slot];
      used.push_back(slot);
    } else if (priors.count(base)) {
      text_value = priors[base];
      used.push_back(base);
    } else {
      text_value = default_hyper().at(base);
    }
    cfg.prior.hyper.emplace(slot, parse_prior(text_value));
  }
  for (const auto& [key, value] : priors)
    if (std::find(used.begin(), used.end(), key) == used.end())
      fail(ErrorCode::SchemaError, "priors." + key + " does not match any parameter of the model");
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

ModelSpec build_model(const Dataset& ds, const RunConfig& config)
{
  return build_model(ds.data, ds.observations, config.error, config.random_effects, config.prior, config.mode,
                     config.log_base);
}

// ---------------------------------------------------------------------------
// Files, hashes, samples

std::string fnv1a_hex(const std::string& bytes)
{
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::SchemaError, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& bytes)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << bytes;
  if (!out)
    fail(ErrorCode::InvalidArgument, "write to '" + path + "' failed");
}

std::string samples_csv(const PosteriorSample& sample)
{
  std::string out;
  for (std::size_t j = 0; j < sample.names.size(); ++j)
    out += (j ? "," : "") + sample.names[j];
  out += '\n';
  for (Eigen::Index s = 0; s < sample.draws.rows(); ++s) {
    for (Eigen::Index j = 0; j < sample.draws.cols(); ++j) {
      if (j)
        out += ',';
      out += fmt17(sample.draws(s, j));
    }
    out += '\n';
  }
  return out;
}

PosteriorSample read_samples_csv(const std::string& text, const ParameterVector& base)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    fail(ErrorCode::SchemaError, "samples file has no header");
  PosteriorSample s;
  s.names = split(line, ',');
  for (const auto& n : s.names)
    get_slot(base, n); // throws ParameterAbsent for names the model lacks
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    const auto cells = split(line, ',');
    if (cells.size() != s.names.size())
      fail(ErrorCode::SchemaError, "samples line " + std::to_string(lineno) + ": wrong number of cells");
    std::vector<double> row;
    for (const auto& c : cells)
      row.push_back(parse_number(c, "samples line " + std::to_string(lineno)));
    rows.push_back(std::move(row));
  }
  s.draws.resize(Eigen::Index(rows.size()), Eigen::Index(s.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < s.names.size(); ++j)
      s.draws(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  s.initial = base;
  s.final_state = base;
  return s;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

nlohmann::json condition_json(const ConditionResult& c)
{
  nlohmann::json j;
  j["verdict"] = to_string(c.verdict);
  j["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
  j["detail"] = c.detail;
  return j;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

} // namespace

std::string propriety_text(const ProprietyReport& r)
{
  std::ostringstream os;
  os << "overall: " << to_string(r.overall) << "\n";
  os << "route: " << to_string(r.route) << "\n";
  const std::pair<const char*, const ConditionResult*> rows[] = {
    {"(a) rank", &r.cond_a},      {"(b) exponent", &r.cond_b}, {"(c) mixing moment", &r.cond_c},
    {"(d) column space", &r.cond_d}, {"(d') censoring LP", &r.cond_d_prime}, {"(e) skewness", &r.cond_e},
    {"prior mass", &r.priors},
  };
  for (const auto& [name, c] : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %-20s %-14s ", name, to_string(c->verdict));
    os << buf << c->detail << "\n";
  }
  for (const auto& n : r.notes)
    os << "note: " << n << "\n";
  if (r.overall != Overall::Proper)
    os << "reason: " << r.reason() << "\n";
  return os.str();
}

std::string propriety_json(const ProprietyReport& r)
{
  nlohmann::json j;
  j["overall"] = to_string(r.overall);
  j["route"] = to_string(r.route);
  j["conditions"] = {{"a", condition_json(r.cond_a)},       {"b", condition_json(r.cond_b)},
                     {"c", condition_json(r.cond_c)},       {"d", condition_json(r.cond_d)},
                     {"d_prime", condition_json(r.cond_d_prime)}, {"e", condition_json(r.cond_e)},
                     {"priors", condition_json(r.priors)}};
  j["lp_status"] = to_string(r.lp_status);
  j["notes"] = r.notes;
  j["reason"] = r.overall == Overall::Proper ? "" : r.reason();
  return j.dump(2);
}

std::string diagnostics_text(const ChainDiagnostics& d)
{
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s %10s %10s %8s\n", "parameter", "median", "2.5%", "97.5%",
                "mean", "sd", "ess");
  os << buf;
  for (const auto& p : d.parameters) {
    if (parse_slot(p.name).base == "u")
      continue;
    std::snprintf(buf, sizeof buf, "%-14s %10.4g %10.4g %10.4g %10.4g %10.4g %8.0f\n", p.name.c_str(), p.median,
                  p.lower, p.upper, p.mean, p.sd, p.ess);
    os << buf;
  }
  os << "acceptance:";
  double umin = 1.0, umax = 0.0;
  std::size_t nu = 0;
  for (const auto& [name, rate] : d.acceptance) {
    if (name.rfind("u_block", 0) == 0) {
      umin = std::min(umin, rate);
      umax = std::max(umax, rate);
      ++nu;
      continue;
    }
    std::snprintf(buf, sizeof buf, " %s %.2f", name.c_str(), rate);
    os << buf;
  }
  if (nu > 0) {
    std::snprintf(buf, sizeof buf, " u blocks %.2f-%.2f", umin, umax);
    os << buf;
  }
  os << "\n";
  return os.str();
}

std::string selection_text(const SelectionReport& r)
{
  std::ostringstream os;
  char buf[160];
  for (const auto& [h, sd] : r.bayes_factors) {
    std::snprintf(buf, sizeof buf, "BF %-16s %12.4g   (log %.4g, bandwidth %.3g)\n", h.c_str(), sd.bf, sd.log_bf,
                  sd.bandwidth);
    os << buf;
  }
  if (r.odds_delta_gt_10) {
    std::snprintf(buf, sizeof buf, "odds delta_eps>10   %12.4g\n", *r.odds_delta_gt_10);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "LPML                %12.4f\n", r.lpml.lpml);
  os << buf;
  for (const auto& f : r.flags)
    os << "warning: " << f << "\n";
  return os.str();
}

std::string selection_json(const SelectionReport& r)
{
  nlohmann::json j;
  nlohmann::json bf = nlohmann::json::object();
  for (const auto& [h, sd] : r.bayes_factors)
    bf[h] = {{"bf", sd.bf},
             {"log_bf", finite_or_null(sd.log_bf)},
             {"log_posterior_density", finite_or_null(sd.log_posterior_density)},
             {"log_prior_density", finite_or_null(sd.log_prior_density)},
             {"bandwidth", sd.bandwidth}};
  j["bayes_factors"] = bf;
  j["odds_delta_gt_10"] = r.odds_delta_gt_10 ? finite_or_null(*r.odds_delta_gt_10) : nlohmann::json(nullptr);
  j["lpml"] = finite_or_null(r.lpml.lpml);
  nlohmann::json cpo = nlohmann::json::array();
  for (double v : r.lpml.log_cpo)
    cpo.push_back(finite_or_null(v));
  j["log_cpo"] = cpo;
  j["clamped_terms"] = r.lpml.clamped;
  j["flags"] = r.flags;
  return j.dump(2);
}

std::string manifest_json(const RunManifest& m)
{
  nlohmann::json j;
  j["software"] = std::string("flexlmm ") + m.software;
  j["created"] = m.created;
  j["data_path"] = m.data_path;
  j["data_hash"] = m.data_hash;
  j["config"] = m.config_text;
  j["spec_hash"] = m.spec_hash;
  j["sampler"] = {{"burn_in", m.sampler.burn_in},         {"thin", m.sampler.thin},
                  {"keep", m.sampler.keep},               {"adapt_batch", m.sampler.adapt_batch},
                  {"target_accept", m.sampler.target_accept}, {"seed", m.sampler.seed},
                  {"override_propriety", m.sampler.override_propriety}};
  j["propriety"] = m.verdict;
  j["samples_file"] = m.samples_file;
  j["samples_hash"] = m.samples_hash;
  return j.dump(2);
}

RunManifest parse_manifest(const std::string& text)
{
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.created = j.value("created", "");
    m.data_path = j.at("data_path").get<std::string>();
    m.data_hash = j.at("data_hash").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.spec_hash = j.value("spec_hash", "");
    const auto& s = j.at("sampler");
    m.sampler.burn_in = s.at("burn_in").get<std::size_t>();
    m.sampler.thin = s.at("thin").get<std::size_t>();
    m.sampler.keep = s.at("keep").get<std::size_t>();
    m.sampler.adapt_batch = s.at("adapt_batch").get<std::size_t>();
    m.sampler.target_accept = s.at("target_accept").get<double>();
    m.sampler.seed = s.at("seed").get<std::uint64_t>();
    m.sampler.override_propriety = s.value("override_propriety", false);
    m.verdict = j.value("propriety", "");
    m.samples_file = j.value("samples_file", "samples.csv");
    m.samples_hash = j.value("samples_hash", "");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("bad manifest: ") + e.what());
  }
  return m;
}

} // namespace flexlmm
