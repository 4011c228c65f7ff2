#pragma once

// Small hand-built models shared by several test files.

#include "flexlmm/model.hpp"

#include <vector>

namespace fixture {

using namespace flexlmm;

// r subjects with m repeats, X = [1, t] (t = 0..m-1), random intercepts.
inline DesignData intercept_design(std::size_t r, std::size_t m)
{
  DesignData d;
  d.q = 1;
  d.r = r;
  const std::size_t n = r * m;
  d.X.resize(Eigen::Index(n), 2);
  d.Z = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(r));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::Index row = Eigen::Index(i * m + j);
      d.X(row, 0) = 1.0;
      d.X(row, 1) = double(j);
      d.Z(row, Eigen::Index(i)) = 1.0;
      d.subject.push_back(i);
    }
  return d;
}

inline std::vector<Observation> exact(const std::vector<double>& y)
{
  std::vector<Observation> o(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    o[i].value = y[i];
    o[i].row = i;
  }
  return o;
}

inline RandomEffectsLaw normal_re()
{
  RandomEffectsLaw l;
  l.marginals = {MarginalKind::Normal};
  return l;
}

// mu fixed at 0 since X carries an intercept
inline PriorSpec normal_re_prior()
{
  PriorSpec p;
  p.hyper.emplace("mu[0]", ProperPrior::point_mass(0.0));
  p.hyper.emplace("sigma[0]", ProperPrior::half_cauchy(1.0));
  return p;
}

inline ModelSpec normal_model(std::size_t r, std::size_t m, const std::vector<double>& y)
{
  return build_model(intercept_design(r, m), exact(y), {}, normal_re(), normal_re_prior());
}

} // namespace fixture
