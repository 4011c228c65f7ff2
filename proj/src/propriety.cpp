#include "flexlmm/propriety.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/quadrature.hpp"

#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace flexlmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kColumnSpaceTol = 1e-8;
constexpr double kPriorMassTol = 1e-6;

std::string num(double x)
{
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

ConditionResult pass(double value, std::string detail)
{
  return {Verdict::Pass, value, std::move(detail)};
}

ConditionResult from_checked(const quad::CheckedIntegral& c, const std::string& what)
{
  switch (c.status) {
    case quad::Finiteness::Finite:
      return {Verdict::Pass, c.value, what + " = " + num(c.value)};
    case quad::Finiteness::Divergent:
      return {Verdict::Fail, kInf,
              what + " diverges (tail exponents " + num(c.lower_exponent) + ", " + num(c.upper_exponent) + ")"};
    case quad::Finiteness::Indeterminate:
      break;
  }
  return {Verdict::Indeterminate, c.value, what + " could not be certified finite"};
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& M, const std::vector<std::size_t>& rows)
{
  Eigen::MatrixXd out(Eigen::Index(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(Eigen::Index(i)) = M.row(Eigen::Index(rows[i]));
  return out;
}

} // namespace

const char* to_string(Verdict v) noexcept
{
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Indeterminate: return "indeterminate";
    case Verdict::NotApplicable: return "not_applicable";
  }
  return "?";
}

const char* to_string(Overall o) noexcept
{
  switch (o) {
    case Overall::Proper: return "proper";
    case Overall::NotGuaranteed: return "not_guaranteed";
    case Overall::Improper: return "improper";
  }
  return "?";
}

const char* to_string(ProprietyRoute r) noexcept
{
  switch (r) {
    case ProprietyRoute::AllExact: return "all_exact";
    case ProprietyRoute::UncensoredSubset: return "uncensored_subset";
    case ProprietyRoute::IntervalCensored: return "interval_censored";
    case ProprietyRoute::None: return "none";
  }
  return "?";
}

std::string ProprietyReport::reason() const
{
  const std::pair<const char*, const ConditionResult*> all[] = {
    {"rank condition (a)", &cond_a},   {"condition (b)", &cond_b},          {"moment condition (c)", &cond_c},
    {"column-space condition (d)", &cond_d}, {"censoring condition (d')", &cond_d_prime},
    {"skewness condition (e)", &cond_e}, {"prior properness", &priors}};
  for (const auto& [label, c] : all)
    if (c->verdict == Verdict::Fail || c->verdict == Verdict::Indeterminate)
      return std::string(label) + " " + to_string(c->verdict) + ": " + c->detail;
  if (!notes.empty())
    return notes.front();
  return "all applicable conditions pass";
}

ConditionResult check_rank_condition(const Eigen::MatrixXd& joint)
{
  const std::size_t n = std::size_t(joint.rows());
  const std::size_t rank = matrix_rank(joint);
  const std::string detail = "rank(X:Z) = " + std::to_string(rank) + ", n = " + std::to_string(n);
  return {rank < n ? Verdict::Pass : Verdict::Fail, double(rank), detail};
}

ConditionResult check_rank_condition(const DesignData& data)
{
  return check_rank_condition(joint_design(data));
}

ConditionResult check_column_space(const Eigen::MatrixXd& joint, const Eigen::VectorXd& y)
{
  if (joint.rows() != y.size())
    fail(ErrorCode::DimensionMismatch, "response length does not match the design");
  double resid = y.norm();
  if (joint.cols() > 0 && y.size() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(joint);
    cod.setThreshold(1e-10);
    const Eigen::VectorXd w = cod.solve(y);
    resid = (y - joint * w).norm();
  }
  const double tol = kColumnSpaceTol * y.norm();
  const std::string detail = "least-squares residual " + num(resid) + " vs tolerance " + num(tol);
  return {resid > tol ? Verdict::Pass : Verdict::Fail, resid, detail};
}

ConditionResult check_column_space(const DesignData& data, const Eigen::VectorXd& y)
{
  return check_column_space(joint_design(data), y);
}

ConditionResult check_mixing_moment(const MixingDistribution& mixing, double b, const ProperPrior& delta_prior)
{
  if (!(b >= 0.0))
    fail(ErrorCode::InvalidPrior, "b must be non-negative");
  if (b == 0.0)
    return pass(1.0, "b = 0: moment is 1 for any mixing");
  if (mixing.kind == MixingKind::PointMass)
    return pass(1.0, "point-mass mixing: moment is 1");
  const double c = 0.5 * b;
  const bool needs_bound = mixing.kind == MixingKind::Gamma || mixing.kind == MixingKind::Beta;
  auto inner = [&](double delta) { return MixingDistribution{mixing.kind, delta}.negative_moment(c); };

  if (delta_prior.is_point_mass()) {
    const double d = delta_prior.point();
    if (needs_bound && d <= 2.0 * c)
      fail(ErrorCode::SupportViolation, "shape prior puts mass at delta = " + num(d) + " <= b = " + num(2.0 * c));
    const double v = inner(d);
    return {std::isfinite(v) ? Verdict::Pass : Verdict::Fail, v, "E[tau^(-b/2)] at delta = " + num(d) + " is " + num(v)};
  }
  const Support s = delta_prior.support();
  if (needs_bound && s.lo < 2.0 * c)
    fail(ErrorCode::SupportViolation, "shape prior support starts at " + num(s.lo) + ", mixing moment needs delta > " + num(2.0 * c));
  const double lo = std::max(s.lo, 0.0);
  auto f = [&](double delta) {
    const double lp = delta_prior.logpdf(delta);
    if (lp == -kInf)
      return 0.0;
    return std::exp(lp) * inner(delta);
  };
  return from_checked(quad::integrate_checked(f, lo, s.hi), "mixing moment integral");
}

ConditionResult check_skewness_condition(SkewParameterisation parameterisation, double b, const ProperPrior& gamma_prior)
{
  if (!(b >= 0.0))
    fail(ErrorCode::InvalidPrior, "b must be non-negative");
  if (b == 0.0)
    return pass(1.0, "b = 0: condition holds for any parameterisation");
  auto m = [&](double g) { return std::pow(scale_factors(parameterisation, g).max(), b); };
  if (gamma_prior.is_point_mass())
    return pass(m(gamma_prior.point()), "point-mass skewness prior");
  const Support s = gamma_prior.support();
  double lo = s.lo, hi = s.hi;
  if (parameterisation == SkewParameterisation::EpsilonSkew) {
    lo = std::max(lo, -1.0);
    hi = std::min(hi, 1.0);
  } else {
    lo = std::max(lo, 0.0);
  }
  auto f = [&](double g) {
    const double lp = gamma_prior.logpdf(g);
    if (lp == -kInf || !gamma_in_domain(parameterisation, g))
      return 0.0;
    return std::exp(lp) * m(g);
  };
  ConditionResult r = from_checked(quad::integrate_checked(f, lo, hi), "skewness moment integral");
  if (parameterisation == SkewParameterisation::EpsilonSkew && r.verdict != Verdict::Fail)
    r.verdict = Verdict::Pass; // max(a, b) <= 2 on the whole domain
  return r;
}

ConditionResult check_prior_mass(const PriorSpec& prior)
{
  std::vector<std::pair<std::string, const ProperPrior*>> all;
  if (prior.delta_eps)
    all.emplace_back("delta_eps", &*prior.delta_eps);
  if (prior.gamma_eps)
    all.emplace_back("gamma_eps", &*prior.gamma_eps);
  for (const auto& [name, p] : prior.hyper)
    all.emplace_back(name, &p);
  double worst = 0.0;
  for (const auto& [name, p] : all) {
    if (p->is_point_mass())
      continue;
    double mass = 0.0;
    try {
      mass = quad::integral(
        [p = p](double x) {
          const double lp = p->logpdf(x);
          return lp == -kInf ? 0.0 : std::exp(lp);
        },
        p->support().lo, p->support().hi);
    } catch (const Error&) {
      return {Verdict::Indeterminate, 0.0, "mass of the prior on " + name + " could not be computed"};
    }
    const double err = std::fabs(mass - 1.0);
    if (err > kPriorMassTol)
      return {Verdict::Fail, mass, "prior on " + name + " has mass " + num(mass)};
    worst = std::max(worst, err);
  }
  return pass(worst, "largest prior mass error " + num(worst));
}

ProprietyReport check_all(const ModelSpec& spec)
{
  ProprietyReport rep;
  const PriorSpec& prior = spec.prior;

  rep.cond_b = prior.b >= 0.0 ? pass(prior.b, "b = " + num(prior.b))
                              : ConditionResult{Verdict::Fail, prior.b, "b = " + num(prior.b) + " < 0"};

  if (spec.error.has_delta()) {
    try {
      rep.cond_c = check_mixing_moment({spec.error.mixing, 1.0}, prior.b, *prior.delta_eps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SupportViolation && e.code() != ErrorCode::QuadratureFailure)
        throw;
      rep.cond_c = {e.code() == ErrorCode::SupportViolation ? Verdict::Fail : Verdict::Indeterminate, kInf, e.what()};
    }
  } else {
    rep.cond_c = pass(1.0, "normal errors: moment is 1");
  }

  if (spec.error.has_gamma()) {
    try {
      rep.cond_e = check_skewness_condition(*spec.error.skew, prior.b, *prior.gamma_eps);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::QuadratureFailure)
        throw;
      rep.cond_e = {Verdict::Indeterminate, kInf, e.what()};
    }
  }

  rep.priors = check_prior_mass(prior);

  const Eigen::MatrixXd joint = joint_design(spec.data);
  const std::size_t cols = std::size_t(joint.cols());
  std::vector<std::size_t> exact, interval;
  for (const Observation& o : spec.observations) {
    if (o.censor == CensorKind::Exact)
      exact.push_back(o.row);
    else if (o.censor == CensorKind::Interval)
      interval.push_back(o.row);
  }
  auto exact_response = [&] {
    Eigen::VectorXd y(Eigen::Index(exact.size()));
    for (std::size_t i = 0; i < exact.size(); ++i)
      y[Eigen::Index(i)] = spec.observations[exact[i]].value;
    return y;
  };

  if (exact.size() == spec.n()) {
    rep.route = ProprietyRoute::AllExact;
    rep.cond_a = check_rank_condition(joint);
    rep.cond_d = check_column_space(joint, exact_response());
  } else if (exact.size() > cols) {
    rep.route = ProprietyRoute::UncensoredSubset;
    const Eigen::MatrixXd sub = rows_of(joint, exact);
    rep.cond_a = check_rank_condition(sub);
    rep.cond_d = check_column_space(sub, exact_response());
    rep.notes.push_back("conditions applied to the " + std::to_string(exact.size()) + " uncensored rows");
  } else if (exact.empty() && !interval.empty()) {
    rep.route = ProprietyRoute::IntervalCensored;
    rep.cond_a = check_rank_condition(joint);
    LpProblem lp;
    lp.A = rows_of(joint, interval);
    lp.lo.resize(Eigen::Index(interval.size()));
    lp.hi.resize(Eigen::Index(interval.size()));
    for (std::size_t i = 0; i < interval.size(); ++i) {
      lp.lo[Eigen::Index(i)] = spec.observations[interval[i]].lower;
      lp.hi[Eigen::Index(i)] = spec.observations[interval[i]].upper;
    }
    const LpResult res = lp_feasibility(lp);
    rep.lp_status = res.status;
    const std::string what = std::to_string(interval.size()) + " interval rows: LP " + to_string(res.status);
    switch (res.status) {
      case LpStatus::Infeasible: rep.cond_d_prime = pass(res.phase_one_objective, what); break;
      case LpStatus::Feasible:
        rep.cond_d_prime = {Verdict::Fail, 0.0, what + " (the column space reaches the censoring box)"};
        break;
      case LpStatus::DegenerateCycle: rep.cond_d_prime = {Verdict::Indeterminate, 0.0, what}; break;
    }
    if (interval.size() < spec.n())
      rep.notes.push_back("right/left-censored rows enter as likelihood factors in [0,1]");
  } else {
    rep.route = ProprietyRoute::None;
    rep.cond_a = check_rank_condition(joint);
    rep.notes.push_back(exact.empty()
                          ? "no interval-censored rows: no sufficient condition applies"
                          : "only " + std::to_string(exact.size()) + " uncensored rows for " + std::to_string(cols)
                              + " location parameters, and exact rows rule out the interval route");
  }

  const ConditionResult* applicable[] = {&rep.cond_a, &rep.cond_b, &rep.cond_c, &rep.cond_d,
                                         &rep.cond_d_prime, &rep.cond_e, &rep.priors};
  bool all_pass = rep.route != ProprietyRoute::None;
  for (const ConditionResult* c : applicable)
    if (c->verdict == Verdict::Fail || c->verdict == Verdict::Indeterminate)
      all_pass = false;
  if (all_pass)
    rep.overall = Overall::Proper;
  else if (rep.route == ProprietyRoute::AllExact && rep.cond_a.verdict == Verdict::Fail)
    rep.overall = Overall::Improper;
  else
    rep.overall = Overall::NotGuaranteed;
  return rep;
}

} // namespace flexlmm
