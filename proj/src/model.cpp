#include "flexlmm/model.hpp"

#include "flexlmm/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <set>

namespace flexlmm {

std::vector<std::size_t> DesignData::n_i() const
{
  std::vector<std::size_t> counts(r, 0);
  for (std::size_t s : subject)
    if (s < r)
      ++counts[s];
  return counts;
}

const char* to_string(CensorKind kind) noexcept
{
  switch (kind) {
    case CensorKind::Exact: return "exact";
    case CensorKind::Interval: return "interval";
    case CensorKind::Right: return "right";
    case CensorKind::Left: return "left";
  }
  return "?";
}

UnivariateLaw ErrorFamily::law(const ParameterVector& params) const
{
  SymmetricBase base = SymmetricBase::normal();
  if (has_delta()) {
    if (!params.delta_eps)
      fail(ErrorCode::ParameterAbsent, "error family needs delta_eps");
    base = SymmetricBase::smn({mixing, *params.delta_eps});
  }
  std::optional<Skew> s;
  if (skew) {
    if (!params.gamma_eps)
      fail(ErrorCode::ParameterAbsent, "error family needs gamma_eps");
    s = Skew{*skew, *params.gamma_eps};
  }
  return UnivariateLaw(base, 0.0, params.sigma_eps, s);
}

bool ModelSpec::all_exact() const noexcept
{
  return std::all_of(observations.begin(), observations.end(),
                     [](const Observation& o) { return o.censor == CensorKind::Exact; });
}

std::size_t matrix_rank(const Eigen::MatrixXd& A)
{
  if (A.size() == 0)
    return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  // The first pivot of a column-pivoted QR is the largest column norm.
  qr.setThreshold(1e-10);
  return std::size_t(qr.rank());
}

Eigen::MatrixXd joint_design(const DesignData& data)
{
  Eigen::MatrixXd A(Eigen::Index(data.n()), data.X.cols() + data.Z.cols());
  A << data.X, data.Z;
  return A;
}

std::vector<std::string> required_hyper_slots(const RandomEffectsLaw& law)
{
  std::vector<std::string> out;
  for (std::size_t i = 0; i < law.q(); ++i)
    for (const auto& name : marginal_parameter_names(law.marginals[i]))
      out.push_back(slot_name(name, i));
  if (law.has_rho())
    out.emplace_back("rho");
  return out;
}

namespace {

double transform_time(double t, std::optional<double> base, const char* what)
{
  if (!(t > 0.0))
    fail(ErrorCode::NonPositiveSurvivalTime, std::string(what) + " must be positive in MEAFT mode");
  return base ? std::log(t) / std::log(*base) : std::log(t);
}

void validate_priors(const ErrorFamily& error, const RandomEffectsLaw& law, const PriorSpec& prior)
{
  if (!(prior.b >= 0.0) || !std::isfinite(prior.b))
    fail(ErrorCode::InvalidPrior, "prior exponent b must be finite and non-negative");
  if (prior.sigma_eps_fixed && !(*prior.sigma_eps_fixed > 0.0))
    fail(ErrorCode::NonPositiveSigma, "fixed sigma_eps must be positive");
  if (!prior.beta.flat && !(prior.beta.lo < prior.beta.hi))
    fail(ErrorCode::InvalidPrior, "beta window needs lo < hi");
  if (error.has_delta() != prior.delta_eps.has_value())
    fail(ErrorCode::InvalidPrior, error.has_delta() ? "delta_eps needs a prior" : "delta_eps prior given but the error family has no shape");
  if (error.has_gamma() != prior.gamma_eps.has_value())
    fail(ErrorCode::InvalidPrior, error.has_gamma() ? "gamma_eps needs a prior" : "gamma_eps prior given but the error family is symmetric");
  const auto required = required_hyper_slots(law);
  for (const auto& name : required)
    if (!prior.hyper.count(name))
      fail(ErrorCode::InvalidPrior, "random-effects parameter '" + name + "' has no prior");
  const std::set<std::string> allowed(required.begin(), required.end());
  for (const auto& [name, p] : prior.hyper)
    if (!allowed.count(name))
      fail(ErrorCode::InvalidPrior, "prior given for unknown parameter '" + name + "'");
}

} // namespace

ModelSpec build_model(DesignData data, std::vector<Observation> observations, ErrorFamily error,
                      RandomEffectsLaw random_effects, PriorSpec prior, Mode mode, std::optional<double> log_base)
{
  const std::size_t n = data.n();
  if (n == 0)
    fail(ErrorCode::EmptyData, "no observations");
  if (std::size_t(data.X.rows()) != n && data.X.cols() > 0)
    fail(ErrorCode::DimensionMismatch, "X has " + std::to_string(data.X.rows()) + " rows, expected " + std::to_string(n));
  if (data.X.cols() == 0)
    data.X.resize(Eigen::Index(n), 0);
  if (data.q == 0) {
    data.Z.resize(Eigen::Index(n), 0);
    data.r = 0;
    for (std::size_t s : data.subject)
      data.r = std::max(data.r, s + 1);
  }
  if (std::size_t(data.Z.rows()) != n)
    fail(ErrorCode::DimensionMismatch, "Z has " + std::to_string(data.Z.rows()) + " rows, expected " + std::to_string(n));
  if (std::size_t(data.Z.cols()) != data.q * data.r)
    fail(ErrorCode::DimensionMismatch, "Z must have q*r = " + std::to_string(data.q * data.r) + " columns");
  if (random_effects.q() != data.q)
    fail(ErrorCode::DimensionMismatch, "random-effects law has " + std::to_string(random_effects.q()) + " marginals, design has q = " + std::to_string(data.q));
  for (std::size_t s : data.subject)
    if (s >= data.r)
      fail(ErrorCode::DimensionMismatch, "subject index out of range");
  const auto counts = data.n_i();
  if (std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; }))
    fail(ErrorCode::DimensionMismatch, "every subject needs at least one row");
  if (observations.size() != n)
    fail(ErrorCode::DimensionMismatch, "expected one observation per design row");
  if (!data.X.allFinite() || !data.Z.allFinite())
    fail(ErrorCode::DimensionMismatch, "design matrices contain non-finite entries");

  if (data.p() > 0 && matrix_rank(data.X) < data.p())
    fail(ErrorCode::RankDeficientX, "rank(X) = " + std::to_string(matrix_rank(data.X)) + " < p = " + std::to_string(data.p()));

  std::sort(observations.begin(), observations.end(), [](const Observation& a, const Observation& b) { return a.row < b.row; });
  for (std::size_t i = 0; i < n; ++i)
    if (observations[i].row != i)
      fail(ErrorCode::DimensionMismatch, "observation rows must cover 0..n-1 exactly once");

  if (log_base && (!(*log_base > 0.0) || *log_base == 1.0))
    fail(ErrorCode::InvalidArgument, "log base must be positive and not 1");
  for (Observation& o : observations) {
    if (mode == Mode::Meaft) {
      switch (o.censor) {
        case CensorKind::Exact: o.value = transform_time(o.value, log_base, "survival time"); break;
        case CensorKind::Interval:
          o.lower = transform_time(o.lower, log_base, "interval lower bound");
          o.upper = transform_time(o.upper, log_base, "interval upper bound");
          break;
        case CensorKind::Right: o.lower = transform_time(o.lower, log_base, "censoring time"); break;
        case CensorKind::Left: o.upper = transform_time(o.upper, log_base, "censoring time"); break;
      }
    }
    const bool ok = [&] {
      switch (o.censor) {
        case CensorKind::Exact: return std::isfinite(o.value);
        case CensorKind::Interval: return std::isfinite(o.lower) && std::isfinite(o.upper);
        case CensorKind::Right: return std::isfinite(o.lower);
        case CensorKind::Left: return std::isfinite(o.upper);
      }
      return false;
    }();
    if (!ok)
      fail(ErrorCode::SchemaError, "non-finite value in observation row " + std::to_string(o.row));
    if (o.censor == CensorKind::Interval && !(o.lower < o.upper))
      fail(ErrorCode::UnorderedInterval, "interval bounds out of order in row " + std::to_string(o.row));
  }

  validate_priors(error, random_effects, prior);
  if (random_effects.truncate_positive && random_effects.has_rho())
    fail(ErrorCode::InvalidArgument, "sign truncation is only supported for independent marginals");

  ModelSpec spec;
  spec.z_structured = true;
  for (std::size_t i = 0; i < n && spec.z_structured; ++i) {
    const std::size_t lo = data.subject[i] * data.q, hi = lo + data.q;
    for (std::size_t c = 0; c < std::size_t(data.Z.cols()); ++c)
      if ((c < lo || c >= hi) && data.Z(Eigen::Index(i), Eigen::Index(c)) != 0.0) {
        spec.z_structured = false;
        break;
      }
  }
  spec.subject_rows_.assign(data.r, {});
  for (std::size_t i = 0; i < n; ++i)
    spec.subject_rows_[data.subject[i]].push_back(i);
  spec.data = std::move(data);
  spec.observations = std::move(observations);
  spec.error = error;
  spec.random_effects = std::move(random_effects);
  spec.prior = std::move(prior);
  spec.mode = mode;
  spec.log_base = log_base;
  return spec;
}

Eigen::VectorXd linear_predictor(const ModelSpec& spec, const ParameterVector& params)
{
  const DesignData& d = spec.data;
  if (params.beta.size() != d.X.cols() || params.u.size() != d.Z.cols())
    fail(ErrorCode::DimensionMismatch, "parameter vector does not match the design");
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(Eigen::Index(d.n()));
  if (d.X.cols() > 0)
    eta.noalias() += d.X * params.beta;
  if (d.Z.cols() == 0)
    return eta;
  if (!spec.z_structured)
    return eta + d.Z * params.u;
  const Eigen::Index q = Eigen::Index(d.q);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const Eigen::Index s = Eigen::Index(d.subject[std::size_t(i)]) * q;
    eta[i] += d.Z.row(i).segment(s, q).dot(params.u.segment(s, q));
  }
  return eta;
}

std::vector<std::string> free_scalar_slots(const ModelSpec& spec)
{
  std::vector<std::string> out;
  for (std::size_t k = 0; k < spec.p(); ++k)
    out.push_back(slot_name("beta", k));
  if (!spec.prior.sigma_eps_fixed)
    out.emplace_back("sigma_eps");
  if (spec.prior.delta_eps && !spec.prior.delta_eps->is_point_mass())
    out.emplace_back("delta_eps");
  if (spec.prior.gamma_eps && !spec.prior.gamma_eps->is_point_mass())
    out.emplace_back("gamma_eps");
  for (const auto& name : required_hyper_slots(spec.random_effects))
    if (!spec.prior.hyper.at(name).is_point_mass())
      out.push_back(name);
  return out;
}

ParameterVector neutral_parameters(const ModelSpec& spec)
{
  ParameterVector p;
  p.beta = Eigen::VectorXd::Zero(Eigen::Index(spec.p()));
  p.u = Eigen::VectorXd::Zero(Eigen::Index(spec.q() * spec.r()));
  p.sigma_eps = spec.prior.sigma_eps_fixed.value_or(1.0);
  if (spec.error.has_delta())
    p.delta_eps = spec.prior.delta_eps->is_point_mass() ? spec.prior.delta_eps->point() : 10.0;
  if (spec.error.has_gamma()) {
    const double neutral = *spec.error.skew == SkewParameterisation::EpsilonSkew ? 0.0 : 1.0;
    p.gamma_eps = spec.prior.gamma_eps->is_point_mass() ? spec.prior.gamma_eps->point() : neutral;
  }
  p.theta_u.marginals.assign(spec.q(), MarginalParams{0.0, 1.0, 0.0, 10.0});
  for (std::size_t i = 0; i < spec.q(); ++i)
    if (spec.random_effects.marginals[i] == MarginalKind::TwoPieceSinhArcsinh)
      p.theta_u.marginals[i].delta = 1.0;
  p.theta_u.rho = 0.0;
  for (const auto& [name, prior] : spec.prior.hyper)
    if (prior.is_point_mass())
      set_slot(p, name, prior.point());
  return p;
}

} // namespace flexlmm
