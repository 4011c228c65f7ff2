#include "flexlmm/sampler.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/likelihood.hpp"
#include "flexlmm/propriety.hpp"
#include "flexlmm/special.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace flexlmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_cosh(double z)
{
  const double a = std::fabs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double median_of(std::vector<double> v)
{
  if (v.empty())
    return 0.0;
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, 0.5);
}

bool has_intercept(const Eigen::MatrixXd& X)
{
  if (X.cols() == 0)
    return false;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(X.rows());
  const Eigen::VectorXd fit = X * X.colPivHouseholderQr().solve(ones);
  return (ones - fit).norm() <= 1e-8 * ones.norm();
}

// A point strictly inside the support of a prior.
double interior_point(const ProperPrior& prior, double preferred)
{
  if (prior.is_point_mass())
    return prior.point();
  const Support s = prior.support();
  if (s.contains(preferred) && std::isfinite(prior.logpdf(preferred)))
    return preferred;
  if (std::isfinite(s.lo) && std::isfinite(s.hi))
    return 0.5 * (s.lo + s.hi);
  if (std::isfinite(s.lo))
    return s.lo + 1.0;
  if (std::isfinite(s.hi))
    return s.hi - 1.0;
  return 0.0;
}

enum class Group
{
  Beta,
  Error,
  Hyper
};

struct ScalarBlock
{
  std::string name;
  Group group = Group::Hyper;
  Eigen::Index beta_index = 0;
  SlotTransform transform;
  double log_scale = 0.0;
};

const ProperPrior* prior_of(const ModelSpec& spec, const std::string& name)
{
  if (name == "delta_eps")
    return spec.prior.delta_eps ? &*spec.prior.delta_eps : nullptr;
  if (name == "gamma_eps")
    return spec.prior.gamma_eps ? &*spec.prior.gamma_eps : nullptr;
  auto it = spec.prior.hyper.find(name);
  return it == spec.prior.hyper.end() ? nullptr : &it->second;
}

// Markov chain over one model; caches the predictor, per-observation
// log-likelihood terms and per-subject random-effects densities.
class Chain
{
public:
  Chain(const ModelSpec& spec, const ParameterVector& init, std::uint64_t seed)
    : spec_(spec), p_(init), rng_(seed)
  {
    eta_ = linear_predictor(spec_, p_);
    law_.emplace(spec_.error.law(p_));
    ll_.resize(Eigen::Index(spec_.n()));
    for (std::size_t i = 0; i < spec_.n(); ++i)
      ll_[Eigen::Index(i)] = obs_ll(i, eta_[Eigen::Index(i)], *law_);
    re_.resize(Eigen::Index(spec_.r()));
    for (std::size_t s = 0; s < spec_.r(); ++s)
      re_[Eigen::Index(s)] = subject_random_effects_logpdf(spec_, p_, s);
    lp_ = log_prior(spec_.prior, p_);
    const double total = ll_.sum() + re_.sum() + lp_;
    if (!std::isfinite(total))
      fail(ErrorCode::NonFiniteLogJoint, "log joint density is not finite at the initial state");
    build_blocks();
  }

  const ParameterVector& params() const noexcept { return p_; }
  std::size_t floored() const noexcept { return floored_; }
  std::vector<ScalarBlock>& scalars() noexcept { return scalars_; }
  std::vector<double>& u_log_scales() noexcept { return u_scales_; }

  bool update_scalar(ScalarBlock& b)
  {
    const double x_old = get_slot(p_, b.name);
    const double z_old = b.transform.to_z(x_old);
    const double z_new = z_old + std::exp(b.log_scale) * normal_(rng_);
    const double x_new = b.transform.to_x(z_new);
    const double jac = b.transform.log_jacobian(z_new) - b.transform.log_jacobian(z_old);

    ParameterVector prop = p_;
    set_slot(prop, b.name, x_new);
    const double lp_new = log_prior(spec_.prior, prop);
    if (!std::isfinite(lp_new) || !std::isfinite(x_new))
      return consume_reject();

    try {
      switch (b.group) {
        case Group::Beta: {
          const Eigen::VectorXd eta_new = eta_ + (x_new - x_old) * spec_.data.X.col(b.beta_index);
          Eigen::VectorXd ll_new(ll_.size());
          for (Eigen::Index i = 0; i < ll_.size(); ++i)
            ll_new[i] = obs_ll(std::size_t(i), eta_new[i], *law_);
          const double delta = ll_new.sum() - ll_.sum() + lp_new - lp_ + jac;
          if (!accept(delta))
            return false;
          eta_ = eta_new;
          ll_ = ll_new;
          break;
        }
        case Group::Error: {
          const UnivariateLaw law = spec_.error.law(prop);
          Eigen::VectorXd ll_new(ll_.size());
          for (Eigen::Index i = 0; i < ll_.size(); ++i)
            ll_new[i] = obs_ll(std::size_t(i), eta_[i], law);
          const double delta = ll_new.sum() - ll_.sum() + lp_new - lp_ + jac;
          if (!accept(delta))
            return false;
          law_.emplace(law);
          ll_ = ll_new;
          break;
        }
        case Group::Hyper: {
          Eigen::VectorXd re_new(re_.size());
          for (Eigen::Index s = 0; s < re_.size(); ++s)
            re_new[s] = subject_random_effects_logpdf(spec_, prop, std::size_t(s));
          const double delta = re_new.sum() - re_.sum() + lp_new - lp_ + jac;
          if (!accept(delta))
            return false;
          re_ = re_new;
          break;
        }
      }
    } catch (const Error&) {
      return false; // proposal outside a parameter domain
    }
    p_ = std::move(prop);
    lp_ = lp_new;
    return true;
  }

  bool update_subject(std::size_t s)
  {
    const std::size_t q = spec_.q();
    const Eigen::Index off = Eigen::Index(s * q);
    const double scale = std::exp(u_scales_[s]);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(Eigen::Index(q));
    for (std::size_t k = 0; k < q; ++k)
      step[Eigen::Index(k)] = scale * normal_(rng_);

    ParameterVector prop = p_;
    prop.u.segment(off, Eigen::Index(q)) += step;
    double re_new;
    try {
      re_new = subject_random_effects_logpdf(spec_, prop, s);
    } catch (const Error&) {
      return consume_reject();
    }
    if (!std::isfinite(re_new))
      return consume_reject();
    const auto& rows = spec_.subject_rows()[s];
    std::vector<double> eta_new(rows.size()), ll_new(rows.size());
    double delta = re_new - re_[Eigen::Index(s)];
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const Eigen::Index i = Eigen::Index(rows[j]);
      eta_new[j] = eta_[i] + spec_.data.Z.row(i).segment(off, Eigen::Index(q)).dot(step);
      ll_new[j] = obs_ll(rows[j], eta_new[j], *law_);
      delta += ll_new[j] - ll_[i];
    }
    if (!accept(delta))
      return false;
    p_.u.segment(off, Eigen::Index(q)) = prop.u.segment(off, Eigen::Index(q));
    re_[Eigen::Index(s)] = re_new;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      eta_[Eigen::Index(rows[j])] = eta_new[j];
      ll_[Eigen::Index(rows[j])] = ll_new[j];
    }
    return true;
  }

private:
  double obs_ll(std::size_t i, double eta, const UnivariateLaw& law)
  {
    bool fl = false;
    const double v = observation_loglik(spec_.observations[i], eta, law, &fl);
    floored_ += fl ? 1 : 0;
    return v;
  }

  bool accept(double delta)
  {
    const double u = uniform_(rng_);
    return std::isfinite(delta) && std::log(u) < delta;
  }

  bool consume_reject()
  {
    uniform_(rng_);
    return false;
  }

  void build_blocks()
  {
    const std::size_t n = spec_.n();
    const double sig = p_.sigma_eps;
    const double r = std::max<double>(1.0, double(spec_.r()));
    double sigma_u = 1.0;
    if (spec_.q() > 0)
      sigma_u = p_.theta_u.marginals[0].sigma;
    for (const auto& name : free_scalar_slots(spec_)) {
      ScalarBlock b;
      b.name = name;
      const SlotName sn = parse_slot(name);
      if (sn.base == "beta") {
        b.group = Group::Beta;
        b.beta_index = Eigen::Index(*sn.index);
        const double norm = spec_.data.X.col(b.beta_index).norm();
        b.log_scale = std::log(2.4 * sig / std::max(norm, 1e-12));
      } else if (sn.base == "sigma_eps" || sn.base == "delta_eps" || sn.base == "gamma_eps") {
        b.group = Group::Error;
        b.transform = SlotTransform::for_support(prior_of(spec_, name) ? prior_of(spec_, name)->support() : Support{0.0, kInf});
        if (sn.base == "sigma_eps")
          b.log_scale = std::log(2.4 / std::sqrt(2.0 * double(n)));
        else if (sn.base == "delta_eps")
          b.log_scale = std::log(0.7);
        else
          b.log_scale = std::log(0.8);
      } else {
        b.group = Group::Hyper;
        const ProperPrior* pr = prior_of(spec_, name);
        if (sn.base == "mu") {
          b.log_scale = std::log(2.4 * p_.theta_u.marginals[*sn.index].sigma / std::sqrt(r));
        } else {
          b.transform = SlotTransform::for_support(pr->support());
          if (sn.base == "sigma")
            b.log_scale = std::log(2.4 / std::sqrt(2.0 * r));
          else if (sn.base == "delta")
            b.log_scale = std::log(0.7);
          else if (sn.base == "gamma")
            b.log_scale = std::log(0.8);
          else
            b.log_scale = std::log(0.5);
        }
      }
      scalars_.push_back(b);
    }
    const double qd = std::max<double>(1.0, double(spec_.q()));
    for (std::size_t s = 0; s < spec_.r(); ++s) {
      const double ni = double(spec_.subject_rows()[s].size());
      const double cond = 1.0 / std::sqrt(ni / (sig * sig) + 1.0 / (sigma_u * sigma_u));
      u_scales_.push_back(std::log(2.4 * cond / std::sqrt(qd)));
    }
  }

  const ModelSpec& spec_;
  ParameterVector p_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  Eigen::VectorXd eta_, ll_, re_;
  double lp_ = 0.0;
  std::optional<UnivariateLaw> law_;
  std::size_t floored_ = 0;
  std::vector<ScalarBlock> scalars_;
  std::vector<double> u_scales_;
};

} // namespace

// ---------------------------------------------------------------------------

SlotTransform SlotTransform::for_support(const Support& s)
{
  SlotTransform t;
  const bool lo = std::isfinite(s.lo), hi = std::isfinite(s.hi);
  t.lo = s.lo;
  t.hi = s.hi;
  if (lo && hi)
    t.kind = Kind::Tanh;
  else if (lo)
    t.kind = Kind::LogAbove;
  else if (hi)
    t.kind = Kind::LogBelow;
  return t;
}

double SlotTransform::to_z(double x) const
{
  switch (kind) {
    case Kind::Identity: return x;
    case Kind::LogAbove: return std::log(x - lo);
    case Kind::LogBelow: return std::log(hi - x);
    case Kind::Tanh: return std::atanh((x - 0.5 * (lo + hi)) / (0.5 * (hi - lo)));
  }
  return x;
}

double SlotTransform::to_x(double z) const
{
  switch (kind) {
    case Kind::Identity: return z;
    case Kind::LogAbove: return lo + std::exp(z);
    case Kind::LogBelow: return hi - std::exp(z);
    case Kind::Tanh: return 0.5 * (lo + hi) + 0.5 * (hi - lo) * std::tanh(z);
  }
  return z;
}

double SlotTransform::log_jacobian(double z) const
{
  switch (kind) {
    case Kind::Identity: return 0.0;
    case Kind::LogAbove:
    case Kind::LogBelow: return z;
    case Kind::Tanh: return std::log(0.5 * (hi - lo)) - 2.0 * log_cosh(z);
  }
  return 0.0;
}

std::size_t PosteriorSample::index_of(const std::string& name) const
{
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    fail(ErrorCode::ParameterAbsent, "sample has no parameter '" + name + "'");
  return std::size_t(it - names.begin());
}

std::vector<double> PosteriorSample::column(const std::string& name) const
{
  const Eigen::Index j = Eigen::Index(index_of(name));
  std::vector<double> out(size());
  for (std::size_t s = 0; s < size(); ++s)
    out[s] = draws(Eigen::Index(s), j);
  return out;
}

ParameterVector PosteriorSample::draw(std::size_t s) const
{
  if (s >= size())
    fail(ErrorCode::InvalidArgument, "draw index out of range");
  ParameterVector p = final_state;
  for (std::size_t j = 0; j < names.size(); ++j)
    set_slot(p, names[j], draws(Eigen::Index(s), Eigen::Index(j)));
  return p;
}

ParameterVector initialize(const ModelSpec& spec, Rng&)
{
  ParameterVector p = neutral_parameters(spec);
  const std::size_t n = spec.n();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(Eigen::Index(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = spec.observations[i];
    switch (o.censor) {
      case CensorKind::Exact: y[Eigen::Index(i)] = o.value; break;
      case CensorKind::Interval: y[Eigen::Index(i)] = 0.5 * (o.lower + o.upper); break;
      case CensorKind::Right: y[Eigen::Index(i)] = o.lower + 1.0; break;
      case CensorKind::Left: y[Eigen::Index(i)] = o.upper - 1.0; break;
    }
  }

  // Fixed effects, with an intercept column when X has none; the intercept
  // seeds the random-effects location.
  const Eigen::MatrixXd& X = spec.data.X;
  const bool add_intercept = !has_intercept(X);
  Eigen::MatrixXd Xa(Eigen::Index(n), X.cols() + (add_intercept ? 1 : 0));
  Xa.leftCols(X.cols()) = X;
  if (add_intercept)
    Xa.col(X.cols()).setOnes();
  const Eigen::VectorXd coef = Xa.cols() > 0 ? Eigen::VectorXd(Xa.colPivHouseholderQr().solve(y)) : Eigen::VectorXd();
  p.beta = coef.head(X.cols());
  const double intercept = add_intercept ? coef[X.cols()] : 0.0;

  // Residual scale and subject-effect spread from the joint fit on (Xa : Z).
  Eigen::MatrixXd J(Eigen::Index(n), Xa.cols() + spec.data.Z.cols());
  J << Xa, spec.data.Z;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
  cod.setThreshold(1e-10);
  const Eigen::VectorXd w = cod.solve(y);
  const Eigen::VectorXd resid = y - J * w;
  std::vector<double> absdev(n);
  const double med = median_of(std::vector<double>(resid.data(), resid.data() + n));
  for (std::size_t i = 0; i < n; ++i)
    absdev[i] = std::fabs(resid[Eigen::Index(i)] - med);
  double sd_y = std::sqrt((y.array() - y.mean()).square().sum() / std::max<double>(1.0, double(n) - 1.0));
  double sigma = 1.4826 * median_of(absdev);
  if (!(sigma > 1e-3 * sd_y) || !std::isfinite(sigma))
    sigma = sd_y > 0.0 ? 0.5 * sd_y : 1.0;
  if (!spec.prior.sigma_eps_fixed)
    p.sigma_eps = sigma;

  const std::size_t q = spec.q(), r = spec.r();
  for (std::size_t k = 0; k < q; ++k) {
    MarginalParams& m = p.theta_u.marginals[k];
    std::vector<double> eff(r);
    for (std::size_t s = 0; s < r; ++s)
      eff[s] = w[Xa.cols() + Eigen::Index(s * q + k)];
    const double mean = std::accumulate(eff.begin(), eff.end(), 0.0) / double(std::max<std::size_t>(r, 1));
    double var = 0.0;
    for (double e : eff)
      var += (e - mean) * (e - mean);
    const double sd = std::sqrt(var / double(std::max<std::size_t>(r, 2) - 1));
    const std::string mu = slot_name("mu", k), sg = slot_name("sigma", k);
    m.mu = interior_point(spec.prior.hyper.at(mu), k == 0 ? intercept : 0.0);
    m.sigma = interior_point(spec.prior.hyper.at(sg), sd > 1e-3 * sigma ? sd : sigma);
  }

  // Keep every remaining free value strictly inside its prior support.
  if (p.delta_eps)
    p.delta_eps = interior_point(*spec.prior.delta_eps, *p.delta_eps);
  if (p.gamma_eps)
    p.gamma_eps = interior_point(*spec.prior.gamma_eps, *p.gamma_eps);
  for (const auto& [name, prior] : spec.prior.hyper)
    set_slot(p, name, interior_point(prior, get_slot(p, name)));
  return p;
}

PosteriorSample run_chain(const ModelSpec& spec, const SamplerConfig& config)
{
  if (!config.override_propriety) {
    const ProprietyReport rep = check_all(spec);
    if (rep.overall != Overall::Proper)
      fail(ErrorCode::ProprietyRefused,
           std::string("posterior is ") + to_string(rep.overall) + ": " + rep.reason());
  }
  if (config.keep > 0 && config.thin == 0)
    fail(ErrorCode::InvalidArgument, "thin must be positive");
  if (config.adapt_batch == 0)
    fail(ErrorCode::InvalidArgument, "adapt_batch must be positive");

  Rng init_rng(config.seed);
  PosteriorSample out;
  out.config = config;
  out.initial = initialize(spec, init_rng);
  Chain chain(spec, out.initial, config.seed ^ 0x9e3779b97f4a7c15ULL);

  auto& scalars = chain.scalars();
  auto& u_scales = chain.u_log_scales();
  const std::size_t nb = scalars.size() + u_scales.size();
  for (const auto& b : scalars)
    out.blocks.push_back(b.name);
  for (std::size_t s = 0; s < u_scales.size(); ++s)
    out.blocks.push_back(slot_name("u_block", s));

  out.names = free_scalar_slots(spec);
  for (std::size_t j = 0; j < spec.q() * spec.r(); ++j)
    out.names.push_back(slot_name("u", j));
  out.draws.resize(Eigen::Index(config.keep), Eigen::Index(out.names.size()));

  auto log_scales = [&] {
    std::vector<double> v;
    for (const auto& b : scalars)
      v.push_back(b.log_scale);
    v.insert(v.end(), u_scales.begin(), u_scales.end());
    return v;
  };

  std::vector<std::size_t> batch_acc(nb, 0), run_acc(nb, 0), burn_acc(nb, 0);
  std::size_t batches = 0, kept = 0;
  const std::size_t total = config.total_iterations();
  if (config.burn_in == 0)
    out.log_scales_burn_in = log_scales();
  for (std::size_t it = 1; it <= total; ++it) {
    std::size_t b = 0;
    for (auto& blk : scalars) {
      if (chain.update_scalar(blk))
        ++batch_acc[b], ++(it <= config.burn_in ? burn_acc : run_acc)[b];
      ++b;
    }
    for (std::size_t s = 0; s < u_scales.size(); ++s, ++b)
      if (chain.update_subject(s))
        ++batch_acc[b], ++(it <= config.burn_in ? burn_acc : run_acc)[b];

    if (it <= config.burn_in && it % config.adapt_batch == 0) {
      ++batches;
      const double step = std::min(0.01, 1.0 / std::sqrt(double(batches)));
      for (std::size_t k = 0; k < nb; ++k) {
        const double rate = double(batch_acc[k]) / double(config.adapt_batch);
        double& ls = k < scalars.size() ? scalars[k].log_scale : u_scales[k - scalars.size()];
        ls += rate > config.target_accept ? step : -step;
      }
    }
    if (it % config.adapt_batch == 0 || it == config.burn_in)
      std::fill(batch_acc.begin(), batch_acc.end(), 0);
    if (it == config.burn_in)
      out.log_scales_burn_in = log_scales();

    if (it > config.burn_in && (it - config.burn_in) % config.thin == 0) {
      const ParameterVector& p = chain.params();
      for (std::size_t j = 0; j < out.names.size(); ++j)
        out.draws(Eigen::Index(kept), Eigen::Index(j)) = get_slot(p, out.names[j]);
      ++kept;
    }
  }
  out.log_scales_final = log_scales();
  const std::size_t post = total - std::min(total, config.burn_in);
  out.acceptance.resize(nb);
  for (std::size_t k = 0; k < nb; ++k)
    out.acceptance[k] = post > 0 ? double(run_acc[k]) / double(post)
                                 : (config.burn_in > 0 ? double(burn_acc[k]) / double(config.burn_in) : 0.0);
  out.final_state = chain.params();
  out.floored_terms = chain.floored();
  return out;
}

// ---------------------------------------------------------------------------

double sorted_quantile(std::span<const double> sorted, double p)
{
  if (sorted.empty())
    fail(ErrorCode::EmptySample, "quantile of an empty sample");
  const double h = (double(sorted.size()) - 1.0) * p;
  const std::size_t lo = std::size_t(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

double effective_sample_size(std::span<const double> x)
{
  const std::size_t n = x.size();
  if (n < 2)
    return double(n);
  double mean = 0.0;
  for (double v : x)
    mean += v;
  mean /= double(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      s += (x[i] - mean) * (x[i + lag] - mean);
    return s / double(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0))
    return double(n);
  // Sum of consecutive autocorrelation pairs while they stay positive.
  double sum = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0)
      break;
    sum += pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1.0 / double(n));
  return double(n) / tau;
}

ChainDiagnostics diagnostics(const PosteriorSample& sample)
{
  if (sample.size() == 0)
    fail(ErrorCode::EmptySample, "no retained draws");
  ChainDiagnostics d;
  for (std::size_t j = 0; j < sample.names.size(); ++j) {
    std::vector<double> col(sample.size());
    for (std::size_t s = 0; s < sample.size(); ++s)
      col[s] = sample.draws(Eigen::Index(s), Eigen::Index(j));
    ParameterSummary ps;
    ps.name = sample.names[j];
    ps.ess = effective_sample_size(col);
    double m = 0.0;
    for (double v : col)
      m += v;
    m /= double(col.size());
    double v2 = 0.0;
    for (double v : col)
      v2 += (v - m) * (v - m);
    ps.mean = m;
    ps.sd = col.size() > 1 ? std::sqrt(v2 / double(col.size() - 1)) : 0.0;
    std::sort(col.begin(), col.end());
    ps.median = sorted_quantile(col, 0.5);
    ps.lower = sorted_quantile(col, 0.025);
    ps.upper = sorted_quantile(col, 0.975);
    d.parameters.push_back(ps);
  }
  for (std::size_t k = 0; k < sample.blocks.size(); ++k)
    d.acceptance.emplace_back(sample.blocks[k], sample.acceptance[k]);
  return d;
}

} // namespace flexlmm
