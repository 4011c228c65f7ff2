#pragma once

#include <functional>

namespace flexlmm::quad {

struct Tolerance
{
  double abs = 1e-10;
  double rel = 1e-8;
};

struct Estimate
{
  double value = 0.0;
  double error = 0.0;
};

using Integrand = std::function<double(double)>;

//! Adaptive integral of f over [a, b]; either bound may be infinite.
//!
//! Gauss-Kronrod is tried first; when its error estimate misses the tolerance
//! (typically an endpoint singularity) a double-exponential rule is used.
//! Throws Error(QuadratureFailure) if neither meets the tolerance.
Estimate integrate(const Integrand& f, double a, double b, Tolerance tol = {});

//! Same as integrate(), returning only the value.
double integral(const Integrand& f, double a, double b, Tolerance tol = {});

//! Tail behaviour of a nonnegative integrand near an endpoint.
enum class Finiteness
{
  Finite,
  Divergent,
  Indeterminate
};

struct CheckedIntegral
{
  Finiteness status = Finiteness::Indeterminate;
  double value = 0.0;
  double lower_exponent = 0.0; //!< local power-law exponent at the lower end
  double upper_exponent = 0.0; //!< local power-law exponent at the upper end
};

//! Integral of a nonnegative f over (a, b) with a divergence scan.
//!
//! The local power-law exponent of f is estimated at each endpoint
//! (in |x| for infinite ends, in distance to the endpoint otherwise).
//! An infinite end converges iff the exponent is < -1, a finite end iff
//! it is > -1; exponents within `margin` of -1 are Indeterminate.
CheckedIntegral integrate_checked(const Integrand& f, double a, double b,
                                  Tolerance tol = {}, double margin = 0.02);

} // namespace flexlmm::quad
