#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace flexlmm {

//! Does some eta satisfy lo <= A eta <= hi (row-wise)?
struct LpProblem
{
  Eigen::MatrixXd A;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

enum class LpStatus
{
  Feasible,
  Infeasible,
  DegenerateCycle //!< iteration cap hit; no verdict
};

const char* to_string(LpStatus status) noexcept;

struct LpResult
{
  LpStatus status = LpStatus::DegenerateCycle;
  Eigen::VectorXd eta; //!< witness when Feasible
  Eigen::VectorXd xi;  //!< A eta, inside the box when Feasible
  double phase_one_objective = 0.0;
  std::size_t iterations = 0;
};

//! Phase-I dense simplex with Bland's rule. Bounds must be finite with lo <= hi.
//! `max_iterations` = 0 picks a cap proportional to the tableau size.
LpResult lp_feasibility(const LpProblem& problem, std::size_t max_iterations = 0);

} // namespace flexlmm
