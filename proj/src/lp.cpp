#include "flexlmm/lp.hpp"

#include "flexlmm/error.hpp"

#include <cmath>
#include <vector>

namespace flexlmm {

const char* to_string(LpStatus status) noexcept
{
  switch (status) {
    case LpStatus::Feasible: return "feasible";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::DegenerateCycle: return "degenerate_cycle";
  }
  return "?";
}

LpResult lp_feasibility(const LpProblem& problem, std::size_t max_iterations)
{
  const Eigen::MatrixXd& A = problem.A;
  const Eigen::Index m = A.rows(), d = A.cols();
  if (problem.lo.size() != m || problem.hi.size() != m)
    fail(ErrorCode::DimensionMismatch, "LP bounds do not match the constraint matrix");
  for (Eigen::Index i = 0; i < m; ++i)
    if (!std::isfinite(problem.lo[i]) || !std::isfinite(problem.hi[i]) || problem.lo[i] > problem.hi[i])
      fail(ErrorCode::UnorderedInterval, "LP bounds must be finite and ordered");

  LpResult res;
  res.eta = Eigen::VectorXd::Zero(d);
  if (m == 0) {
    res.status = LpStatus::Feasible;
    res.xi.resize(0);
    return res;
  }

  // Columns: eta+ (d), eta- (d), w (m), v (m), artificials (2m), rhs.
  // Rows:    A eta+ - A eta- - w = lo,   w + v = hi - lo.
  const Eigen::Index nvar = 2 * d + 2 * m, rows = 2 * m, cols = nvar + rows;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(rows + 1, cols + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    T.row(i).segment(0, d) = A.row(i);
    T.row(i).segment(d, d) = -A.row(i);
    T(i, 2 * d + i) = -1.0;
    T(i, cols) = problem.lo[i];
    T(m + i, 2 * d + i) = 1.0;
    T(m + i, 2 * d + m + i) = 1.0;
    T(m + i, cols) = problem.hi[i] - problem.lo[i];
  }
  std::vector<Eigen::Index> basis(std::size_t(rows), 0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (T(i, cols) < 0.0)
      T.row(i) *= -1.0;
    T(i, nvar + i) = 1.0;
    basis[std::size_t(i)] = nvar + i;
  }
  // Reduced costs of the phase-I objective (sum of artificials).
  T.row(rows).setZero();
  for (Eigen::Index i = 0; i < rows; ++i) {
    T.row(rows).head(nvar) -= T.row(i).head(nvar);
    T(rows, cols) -= T(i, cols);
  }

  const double scale = std::max(1.0, T.col(cols).head(rows).cwiseAbs().maxCoeff());
  const double eps = 1e-11 * std::max(1.0, A.cwiseAbs().maxCoeff());
  if (max_iterations == 0)
    max_iterations = std::size_t(50 * (rows + cols)) + 1000;

  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j)
      if (T(rows, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0)
      break;
    if (res.iterations >= max_iterations) {
      res.status = LpStatus::DegenerateCycle;
      return res;
    }
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double a = T(i, enter);
      if (a <= eps)
        continue;
      const double ratio = T(i, cols) / a;
      if (leave < 0 || ratio < best - 1e-12 * scale
          || (ratio <= best + 1e-12 * scale && basis[std::size_t(i)] < basis[std::size_t(leave)])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave < 0)
      break; // cannot happen for a phase-I objective bounded below
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= rows; ++i)
      if (i != leave && T(i, enter) != 0.0)
        T.row(i) -= T(i, enter) * T.row(leave);
    basis[std::size_t(leave)] = enter;
    ++res.iterations;
  }

  res.phase_one_objective = -T(rows, cols);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    x[basis[std::size_t(i)]] = T(i, cols);
  res.eta = x.head(d) - x.segment(d, d);
  res.xi = A * res.eta;
  res.status = res.phase_one_objective <= 1e-9 * scale ? LpStatus::Feasible : LpStatus::Infeasible;
  return res;
}

} // namespace flexlmm
