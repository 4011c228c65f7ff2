#pragma once

#include "flexlmm/distributions.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>

namespace flexlmm {

//! Full parameter vector of one model.
//!
//! Random effects are stored subject-major: u[i * q + k] is effect k of subject i.
struct ParameterVector
{
  Eigen::VectorXd beta;
  double sigma_eps = 1.0;
  std::optional<double> delta_eps;
  std::optional<double> gamma_eps;
  RandomEffectsParams theta_u;
  Eigen::VectorXd u;
};

//! Parsed scalar slot name such as "beta[2]", "sigma_eps" or "gamma[0]".
struct SlotName
{
  std::string base;
  std::optional<std::size_t> index;
};

SlotName parse_slot(const std::string& name);
std::string slot_name(const std::string& base, std::optional<std::size_t> index = {});

//! Read or write a scalar slot. Throws ParameterAbsent for unknown or unset slots.
double get_slot(const ParameterVector& params, const std::string& name);
void set_slot(ParameterVector& params, const std::string& name, double value);

} // namespace flexlmm
