#include "flexlmm/error.hpp"
#include "flexlmm/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace flexlmm;

TEST_CASE("smooth integrals over finite and infinite ranges")
{
  CHECK(quad::integral([](double x) { return std::sin(x); }, 0.0, M_PI) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(quad::integral([](double x) { return std::exp(-x * x); }, -INFINITY, INFINITY) ==
        doctest::Approx(std::sqrt(M_PI)).epsilon(1e-10));
  CHECK(quad::integral([](double x) { return std::exp(-x); }, 0.0, INFINITY) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("endpoint singularity falls back to a double-exponential rule")
{
  // integral of x^{-1/2} on (0,1) is 2
  const auto e = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(e.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("non-finite integrand surfaces as QuadratureFailure")
{
  try {
    quad::integral([](double) { return NAN; }, 0.0, 1.0);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::QuadratureFailure);
  }
}

TEST_CASE("divergence scan classifies power tails")
{
  auto conv = quad::integrate_checked([](double x) { return std::pow(1.0 + x, -2.0); }, 0.0, INFINITY);
  CHECK(conv.status == quad::Finiteness::Finite);
  CHECK(conv.value == doctest::Approx(1.0).epsilon(1e-7));

  auto div = quad::integrate_checked([](double x) { return std::pow(1.0 + x, -0.5); }, 0.0, INFINITY);
  CHECK(div.status == quad::Finiteness::Divergent);

  auto div0 = quad::integrate_checked([](double x) { return 1.0 / (x * std::sqrt(x)); }, 0.0, 1.0);
  CHECK(div0.status == quad::Finiteness::Divergent);

  auto edge = quad::integrate_checked([](double x) { return 1.0 / (1.0 + x); }, 0.0, INFINITY);
  CHECK(edge.status != quad::Finiteness::Finite);
}
