#include "flexlmm/quadrature.hpp"

#include "flexlmm/error.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <sstream>

namespace flexlmm::quad {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool meets(const Estimate& e, double l1, const Tolerance& tol)
{
  return std::isfinite(e.value) && e.error <= std::max(tol.abs, tol.rel * l1);
}

Estimate double_exponential(const Integrand& f, double a, double b, const Tolerance& tol,
                            double& l1)
{
  Estimate e;
  const auto guarded = [&f](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  if (std::isfinite(a) && std::isfinite(b)) {
    boost::math::quadrature::tanh_sinh<double> rule(15);
    e.value = rule.integrate(guarded, a, b, tol.rel, &e.error, &l1);
  } else if (std::isfinite(a)) {
    boost::math::quadrature::exp_sinh<double> rule(9);
    e.value = rule.integrate([&](double t) { return guarded(a + t); }, 0.0, kInf, tol.rel,
                             &e.error, &l1);
  } else if (std::isfinite(b)) {
    boost::math::quadrature::exp_sinh<double> rule(9);
    e.value = rule.integrate([&](double t) { return guarded(b - t); }, 0.0, kInf, tol.rel,
                             &e.error, &l1);
  } else {
    boost::math::quadrature::sinh_sinh<double> rule(9);
    e.value = rule.integrate(guarded, tol.rel, &e.error, &l1);
  }
  return e;
}

} // namespace

Estimate integrate(const Integrand& f, double a, double b, Tolerance tol)
{
  if (a == b)
    return {};
  if (a > b) {
    Estimate e = integrate(f, b, a, tol);
    e.value = -e.value;
    return e;
  }
  // the double-exponential guard zeroes non-finite values, which is only
  // meant for endpoint evaluations; reject integrands broken in the interior
  {
    const double mid = std::isfinite(a) && std::isfinite(b) ? 0.5 * (a + b)
                       : std::isfinite(a)                   ? a + 1.0
                       : std::isfinite(b)                   ? b - 1.0
                                                            : 0.0;
    if (!std::isfinite(f(mid)))
      fail(ErrorCode::QuadratureFailure, "integrand is not finite inside the range");
  }
  Estimate gk;
  double l1 = 0.0;
  try {
    gk.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 18, tol.rel * 0.1, &gk.error, &l1);
  } catch (const std::exception&) {
    gk.value = std::numeric_limits<double>::quiet_NaN();
  }
  if (meets(gk, l1, tol))
    return gk;

  Estimate de;
  double l1_de = 0.0;
  try {
    de = double_exponential(f, a, b, tol, l1_de);
  } catch (const std::exception&) {
    de.value = std::numeric_limits<double>::quiet_NaN();
  }
  if (meets(de, l1_de, tol))
    return de;

  std::ostringstream msg;
  msg << "integral over [" << a << ", " << b << "] missed tolerance (GK error " << gk.error
      << ", DE error " << de.error << ")";
  fail(ErrorCode::QuadratureFailure, msg.str());
}

double integral(const Integrand& f, double a, double b, Tolerance tol)
{
  return integrate(f, a, b, tol).value;
}

namespace {

struct EndBehaviour
{
  double exponent = 0.0;
  bool vanishes = false;
  bool unknown = false;
};

// Power-law exponent of f in the coordinate s, measured between s_inner and
// s_outer = 10 * s_inner; `near_is_outer` says which probe lies closer to the
// endpoint under study.
template<class Map>
EndBehaviour probe_end(const Integrand& f, Map x_of_s, double s_inner, bool near_is_outer)
{
  const double s_outer = s_inner * 10.0;
  const double f_inner = f(x_of_s(s_inner));
  const double f_outer = f(x_of_s(s_outer));
  const double f_near = near_is_outer ? f_outer : f_inner;
  const double f_far = near_is_outer ? f_inner : f_outer;
  EndBehaviour e;
  if (!(f_near > 0.0)) {
    e.vanishes = !(f_near < 0.0) && !std::isnan(f_near);
    e.unknown = !e.vanishes;
    return e;
  }
  if (!(f_far > 0.0) || !std::isfinite(f_near) || !std::isfinite(f_far)) {
    e.unknown = true;
    return e;
  }
  e.exponent = (std::log(f_outer) - std::log(f_inner)) / std::log(10.0);
  return e;
}

} // namespace

CheckedIntegral integrate_checked(const Integrand& f, double a, double b, Tolerance tol,
                                  double margin)
{
  CheckedIntegral out;
  bool divergent = false;
  bool indeterminate = false;

  // Infinite ends converge for exponents below -1 in |x|; finite ends converge
  // for exponents above -1 in the distance to the endpoint.
  const auto classify = [&](const EndBehaviour& e, bool infinite_end, double& exponent) {
    exponent = e.exponent;
    if (e.vanishes)
      return;
    if (e.unknown || std::abs(e.exponent + 1.0) <= margin) {
      indeterminate = true;
      return;
    }
    if (infinite_end ? e.exponent > -1.0 : e.exponent < -1.0)
      divergent = true;
  };

  if (std::isinf(a))
    classify(probe_end(f, [](double s) { return -s; }, 1e7, true), true, out.lower_exponent);
  else
    classify(probe_end(f, [a](double s) { return a + s; }, 1e-9, false), false,
             out.lower_exponent);
  if (std::isinf(b))
    classify(probe_end(f, [](double s) { return s; }, 1e7, true), true, out.upper_exponent);
  else
    classify(probe_end(f, [b](double s) { return b - s; }, 1e-9, false), false,
             out.upper_exponent);

  if (divergent) {
    out.status = Finiteness::Divergent;
    out.value = kInf;
    return out;
  }
  try {
    out.value = integral(f, a, b, tol);
    out.status = indeterminate ? Finiteness::Indeterminate : Finiteness::Finite;
  } catch (const Error&) {
    out.status = Finiteness::Indeterminate;
    out.value = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

} // namespace flexlmm::quad
