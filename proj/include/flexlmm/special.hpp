#pragma once

#include <span>

namespace flexlmm {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kEulerGamma = 0.57721566490153286061;

// Standard normal.
double normal_logpdf(double z) noexcept;
double normal_cdf(double z) noexcept;
double normal_sf(double z) noexcept;
double normal_logcdf(double z) noexcept;
//! Inverse of normal_cdf on (0,1); infinite at the endpoints.
double normal_quantile(double p);

// Standardised Student-t with `nu` degrees of freedom.
double student_t_logpdf(double z, double nu) noexcept;
double student_t_cdf(double z, double nu);

//! Modified Bessel function of the second kind K_nu(x), x > 0, any real nu.
double bessel_k(double nu, double x);
//! exp(x) * K_nu(x); stays finite where K_nu underflows.
double bessel_k_scaled(double nu, double x);

double log_sum_exp(std::span<const double> values) noexcept;
//! Pairwise summation; fixed evaluation order for reproducible totals.
double pairwise_sum(std::span<const double> values) noexcept;

//! log(exp(a) - exp(b)) for a >= b.
double log_diff_exp(double a, double b) noexcept;

} // namespace flexlmm
