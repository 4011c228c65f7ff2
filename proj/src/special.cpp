#include "flexlmm/special.hpp"

#include "flexlmm/error.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

namespace flexlmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;

using boost_policy = boost::math::policies::policy<
  boost::math::policies::domain_error<boost::math::policies::errno_on_error>,
  boost::math::policies::overflow_error<boost::math::policies::errno_on_error>,
  boost::math::policies::evaluation_error<boost::math::policies::errno_on_error>>;

} // namespace

double normal_logpdf(double z) noexcept
{
  return -0.5 * z * z - kLogSqrt2Pi;
}

double normal_cdf(double z) noexcept
{
  return 0.5 * std::erfc(-z / kSqrt2);
}

double normal_sf(double z) noexcept
{
  return 0.5 * std::erfc(z / kSqrt2);
}

double normal_logcdf(double z) noexcept
{
  if (z > -30.0)
    return std::log(normal_cdf(z));
  // Mills-ratio expansion in the far lower tail.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return normal_logpdf(z) - std::log(-z) + std::log(series);
}

double normal_quantile(double p)
{
  if (!(p >= 0.0 && p <= 1.0))
    fail(ErrorCode::OutOfDomain, "normal_quantile: probability outside [0,1]");
  if (p == 0.0)
    return -kInf;
  if (p == 1.0)
    return kInf;
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p, boost_policy());
}

double student_t_logpdf(double z, double nu) noexcept
{
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * kPi) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double student_t_cdf(double z, double nu)
{
  if (std::isinf(z))
    return z > 0 ? 1.0 : 0.0;
  const boost::math::students_t_distribution<double, boost_policy> dist(nu);
  return boost::math::cdf(dist, z);
}

namespace {

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2, both multiplied by exp(x).
// Temme's series below x = 2, Steed's continued fraction above.
void bessel_k_pair_scaled(double mu, double x, double& k_mu, double& k_mu1)
{
  constexpr double eps = 1e-16;
  constexpr int max_iter = 10000;
  const double mu2 = mu * mu;
  if (x < 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = kPi * mu;
    const double fact = std::abs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;
    // gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2
    const double gp = boost::math::tgamma1pm1(mu);  // G(1+mu) - 1
    const double gm = boost::math::tgamma1pm1(-mu); // G(1-mu) - 1
    const double gampl = 1.0 / (1.0 + gp);
    const double gammi = 1.0 / (1.0 + gm);
    const double gam1 = std::abs(mu) < 1e-10 ? -kEulerGamma
                                              : (gp - gm) / (2.0 * mu) * gampl * gammi;
    const double gam2 = 0.5 * (gammi + gampl);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= max_iter; ++i) {
      ff = (i * ff + p + q) / (i * i - mu2);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * eps)
        break;
    }
    if (i > max_iter)
      fail(ErrorCode::QuadratureFailure, "bessel_k: series did not converge");
    const double scale = std::exp(x);
    k_mu = sum * scale;
    k_mu1 = sum1 * (2.0 / x) * scale;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= max_iter; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < eps)
        break;
    }
    if (i > max_iter)
      fail(ErrorCode::QuadratureFailure, "bessel_k: continued fraction did not converge");
    h *= a1;
    k_mu = std::sqrt(kPi / (2.0 * x)) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
  }
}

} // namespace

double bessel_k_scaled(double nu, double x)
{
  if (!(x > 0.0))
    fail(ErrorCode::OutOfDomain, "bessel_k: argument must be positive");
  nu = std::abs(nu);
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  double k_mu = 0.0;
  double k_mu1 = 0.0;
  bessel_k_pair_scaled(mu, x, k_mu, k_mu1);
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * (2.0 / x) * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

double bessel_k(double nu, double x)
{
  return bessel_k_scaled(nu, x) * std::exp(-x);
}

double log_sum_exp(std::span<const double> values) noexcept
{
  if (values.empty())
    return -kInf;
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m))
    return m;
  double s = 0.0;
  for (double v : values)
    s += std::exp(v - m);
  return m + std::log(s);
}

double pairwise_sum(std::span<const double> values) noexcept
{
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values)
      s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double log_diff_exp(double a, double b) noexcept
{
  if (b == -kInf)
    return a;
  if (a <= b)
    return -kInf;
  return a + std::log(-std::expm1(b - a));
}

} // namespace flexlmm
