#include "flexlmm/pathology.hpp"

#include "flexlmm/error.hpp"
#include "flexlmm/quadrature.hpp"
#include "flexlmm/special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace flexlmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const quad::Tolerance kTight{1e-15, 1e-10};

// log of the integral over beta (flat) and u ~ N(0, s2u I) of N(y; X beta + Z u, diag(noise)).
double log_gaussian_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z, double s2u,
                             const Eigen::VectorXd& noise)
{
  const Eigen::Index n = y.size(), p = X.cols();
  Eigen::MatrixXd V = s2u * Z * Z.transpose();
  V.diagonal() += noise;
  const Eigen::LLT<Eigen::MatrixXd> llt(V);
  if (llt.info() != Eigen::Success)
    return -kInf;
  const Eigen::MatrixXd Vx = llt.solve(X);
  const Eigen::VectorXd Vy = llt.solve(y);
  const Eigen::MatrixXd M = X.transpose() * Vx;
  const Eigen::LLT<Eigen::MatrixXd> mllt(M);
  const Eigen::VectorXd g = X.transpose() * Vy;
  double log_det_v = 0.0, log_det_m = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = llt.matrixL()(i, i);
    if (!(l > 1e-150) || !std::isfinite(l))
      return -kInf;
    log_det_v += 2.0 * std::log(l);
  }
  for (Eigen::Index i = 0; i < p; ++i)
    log_det_m += 2.0 * std::log(mllt.matrixL()(i, i));
  const double quad_form = y.dot(Vy) - g.dot(mllt.solve(g));
  return -double(n - p) * kLogSqrt2Pi - 0.5 * log_det_v - 0.5 * log_det_m - 0.5 * quad_form;
}

struct TinyModel
{
  Eigen::MatrixXd X, Z;
  double s2u;
  double b;

  // Integral over sigma of sigma^-(b+1) times the Gaussian marginal with
  // residual variances sigma^2 / tau_j, taken in t = log(sigma).
  double sigma_integral(const Eigen::VectorXd& y, const Eigen::VectorXd& inv_tau) const
  {
    // Centre the integrand near its peak: sigma / sqrt(tau) ~ spread of y.
    const double spread = std::max((y.array() - y.mean()).matrix().norm() / std::sqrt(double(y.size())), 1e-3);
    const double t0 = std::log(spread) - 0.5 * std::log(inv_tau.mean());
    return quad::integral(
      [&](double s) {
        const double t = t0 + s;
        const double lg = log_gaussian_marginal(y, X, Z, s2u, std::exp(2.0 * t) * inv_tau);
        return std::isfinite(lg) ? std::exp(lg - b * t) : 0.0;
      },
      -kInf, kInf, kTight);
  }
};

// Expectation of g(tau) under H(. | delta), by adaptive quadrature in log(tau).
double mixing_integral(MixingKind kind, double delta, const std::function<double(double)>& g)
{
  if (kind == MixingKind::PointMass)
    return g(1.0);
  const MixingDistribution h{kind, delta};
  if (kind == MixingKind::Beta) {
    return quad::integral([&](double v) { return v <= 0.0 ? 0.0 : g(std::pow(v, 2.0 / delta)); }, 0.0, 1.0, kTight);
  }
  return quad::integral(
    [&](double s) {
      const double tau = std::exp(s);
      if (!(tau > 0.0) || !std::isfinite(tau))
        return 0.0;
      const double lw = h.logpdf(tau) + s;
      return lw > -700.0 ? std::exp(lw) * g(tau) : 0.0;
    },
    -kInf, kInf, kTight);
}

// Average of f(delta) over the shape prior.
double prior_average(const ProperPrior& prior, const std::function<double(double)>& f)
{
  if (prior.is_point_mass())
    return f(prior.point());
  const Support s = prior.support();
  return quad::integral(
    [&](double d) {
      const double lp = prior.logpdf(d);
      return lp == -kInf ? 0.0 : std::exp(lp) * f(d);
    },
    std::max(s.lo, 0.0), s.hi, kTight);
}

// Gauss rule for the mixing law: nodes are tau values, weights sum to one.
void mixing_rule(MixingKind kind, double delta, std::size_t n, Eigen::VectorXd& tau, Eigen::VectorXd& w)
{
  const Eigen::Index N = Eigen::Index(n);
  Eigen::VectorXd a(N), b(N > 1 ? N - 1 : 0), x;
  switch (kind) {
    case MixingKind::PointMass:
      tau = Eigen::VectorXd::Ones(1);
      w = Eigen::VectorXd::Ones(1);
      return;
    case MixingKind::Gamma: {
      // generalised Laguerre, weight x^alpha e^-x, tau = 2x / delta
      const double alpha = 0.5 * delta - 1.0;
      for (Eigen::Index k = 0; k < N; ++k)
        a[k] = 2.0 * double(k) + alpha + 1.0;
      for (Eigen::Index k = 1; k < N; ++k)
        b[k - 1] = std::sqrt(double(k) * (double(k) + alpha));
      golub_welsch(a, b, 1.0, x, w);
      tau = 2.0 * x / delta;
      return;
    }
    case MixingKind::Beta: {
      // Legendre on v in (0, 1), tau = v^(2 / delta)
      a.setZero();
      for (Eigen::Index k = 1; k < N; ++k)
        b[k - 1] = double(k) / std::sqrt(4.0 * double(k) * double(k) - 1.0);
      golub_welsch(a, b, 1.0, x, w);
      tau = (0.5 * (x.array() + 1.0)).pow(2.0 / delta).matrix();
      return;
    }
    case MixingKind::BirnbaumSaunders: {
      // probabilists' Hermite, tau from the normal representation
      a.setZero();
      for (Eigen::Index k = 1; k < N; ++k)
        b[k - 1] = std::sqrt(double(k));
      golub_welsch(a, b, 1.0, x, w);
      tau.resize(N);
      for (Eigen::Index k = 0; k < N; ++k) {
        const double h = 0.5 * delta * x[k];
        const double s = h + std::sqrt(h * h + 1.0);
        tau[k] = s * s / delta;
      }
      return;
    }
  }
}

double per_observation_marginal(const TinyModel& m, const Eigen::VectorXd& y, const MixerChoice& c, std::size_t nodes)
{
  if (!c.delta_prior.is_point_mass())
    fail(ErrorCode::InvalidArgument, "the per-observation mixer demo needs a point-mass shape prior");
  Eigen::VectorXd tau, w;
  mixing_rule(c.kind, c.delta_prior.point(), nodes, tau, w);
  const Eigen::Index n = y.size(), k = tau.size();
  std::vector<Eigen::Index> idx(std::size_t(n), 0);
  Eigen::VectorXd inv_tau(n);
  const double wmax = w.maxCoeff();
  double total = 0.0;
  for (;;) {
    double weight = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      weight *= w[idx[std::size_t(j)]];
      inv_tau[j] = 1.0 / tau[idx[std::size_t(j)]];
    }
    if (weight > 1e-18 * std::pow(wmax, double(n)))
      total += weight * m.sigma_integral(y, inv_tau);
    Eigen::Index j = 0;
    while (j < n && ++idx[std::size_t(j)] == k)
      idx[std::size_t(j++)] = 0;
    if (j == n)
      break;
  }
  return total;
}

} // namespace

void golub_welsch(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double mu0, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights)
{
  const Eigen::Index n = a.size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  J.diagonal() = a;
  for (Eigen::Index k = 0; k + 1 < n; ++k)
    J(k, k + 1) = J(k + 1, k) = b[k];
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights = mu0 * es.eigenvectors().row(0).array().square().matrix().transpose();
}

PathologyInput default_pathology_input()
{
  PathologyInput in;
  in.design.X = Eigen::MatrixXd::Ones(4, 1);
  in.design.Z = Eigen::MatrixXd::Zero(4, 2);
  in.design.Z(0, 0) = in.design.Z(1, 0) = 1.0;
  in.design.Z(2, 1) = in.design.Z(3, 1) = 1.0;
  in.design.subject = {0, 0, 1, 1};
  in.design.q = 1;
  in.design.r = 2;
  Eigen::VectorXd y1(4), y2(4);
  y1 << 1.2, 0.7, -0.4, 0.3;
  y2 << 0.5, 0.6, 6.0, -0.8;
  in.datasets = {y1, y2};
  in.re_sigma = 1.0;
  in.b = 1.0;
  in.first = {MixingKind::Gamma, ProperPrior::point_mass(6.0)};
  in.second = {MixingKind::Gamma, ProperPrior::point_mass(12.0)};
  return in;
}

double PathologyReport::single_bf_spread() const
{
  double s = 0.0;
  for (const auto& d : datasets)
    s = std::max(s, std::fabs(d.bf_single / datasets.front().bf_single - 1.0));
  return s;
}

double PathologyReport::per_observation_bf_spread() const
{
  double s = 0.0;
  for (const auto& d : datasets)
    s = std::max(s, std::fabs(d.bf_per_observation / datasets.front().bf_per_observation - 1.0));
  return s;
}

PathologyReport demo_single_mixer_factorisation(const PathologyInput& in)
{
  const DesignData& d = in.design;
  if (d.n() > 4 || d.p() != 1 || d.q != 1 || d.r > 2 || d.Z.cols() != Eigen::Index(d.r)
      || d.X.rows() != Eigen::Index(d.n()) || d.Z.rows() != Eigen::Index(d.n()))
    fail(ErrorCode::InvalidArgument, "the pathology demo needs n <= 4, p = 1, q = 1, r <= 2");
  if (!(in.b >= 0.0) || !(in.re_sigma > 0.0))
    fail(ErrorCode::InvalidArgument, "the pathology demo needs b >= 0 and a positive random-effects scale");
  for (const auto& y : in.datasets)
    if (y.size() != Eigen::Index(d.n()))
      fail(ErrorCode::DimensionMismatch, "dataset length does not match the design");

  const TinyModel m{d.X, d.Z, in.re_sigma * in.re_sigma, in.b};
  const double c = 0.5 * in.b;
  auto factor = [&](const MixerChoice& ch) {
    return prior_average(ch.delta_prior, [&](double delta) {
      return mixing_integral(ch.kind, delta, [c](double tau) { return std::pow(tau, -c); });
    });
  };
  auto single = [&](const Eigen::VectorXd& y, const MixerChoice& ch) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(y.size());
    return prior_average(ch.delta_prior, [&](double delta) {
      return mixing_integral(ch.kind, delta, [&](double tau) { return m.sigma_integral(y, ones / tau); });
    });
  };

  PathologyReport rep;
  rep.b = in.b;
  rep.factor_first = factor(in.first);
  rep.factor_second = factor(in.second);
  rep.bf_prior_only = rep.factor_first / rep.factor_second;
  for (const auto& y : in.datasets) {
    PathologyDataset ds;
    ds.y = y;
    ds.normal_marginal = m.sigma_integral(y, Eigen::VectorXd::Ones(y.size()));
    ds.single_first = single(y, in.first);
    ds.single_second = single(y, in.second);
    ds.factorisation_error =
      std::max(std::fabs(ds.single_first / (ds.normal_marginal * rep.factor_first) - 1.0),
               std::fabs(ds.single_second / (ds.normal_marginal * rep.factor_second) - 1.0));
    ds.bf_single = ds.single_first / ds.single_second;
    ds.per_obs_first = per_observation_marginal(m, y, in.first, in.nodes);
    ds.per_obs_second = per_observation_marginal(m, y, in.second, in.nodes);
    ds.bf_per_observation = ds.per_obs_first / ds.per_obs_second;
    rep.datasets.push_back(std::move(ds));
  }
  return rep;
}

} // namespace flexlmm
