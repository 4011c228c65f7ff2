#pragma once

#include "flexlmm/lp.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace oracle {

using flexlmm::LpProblem;

// Brute force: if the box {lo <= A eta <= hi} is non-empty, some point of it
// makes p = rank(A) linearly independent rows tight. Enumerate row subsets
// and lo/hi choices, solve, and test the rest.
inline bool brute_feasible(const LpProblem& P)
{
  const Eigen::Index m = P.A.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(P.A);
  lu.setThreshold(1e-10);
  const Eigen::Index rank = lu.rank();
  if (rank == 0)
    return (P.lo.array() <= 1e-9).all() && (P.hi.array() >= -1e-9).all();
  std::vector<int> pick(static_cast<std::size_t>(rank));
  std::function<bool(Eigen::Index, Eigen::Index)> rec = [&](Eigen::Index start, Eigen::Index depth) -> bool {
    if (depth == rank) {
      Eigen::MatrixXd S(rank, P.A.cols());
      for (Eigen::Index k = 0; k < rank; ++k)
        S.row(k) = P.A.row(pick[std::size_t(k)]);
      Eigen::FullPivLU<Eigen::MatrixXd> sl(S);
      sl.setThreshold(1e-10);
      if (sl.rank() < rank)
        return false;
      for (unsigned mask = 0; mask < (1u << rank); ++mask) {
        Eigen::VectorXd rhs(rank);
        for (Eigen::Index k = 0; k < rank; ++k)
          rhs[k] = (mask >> k) & 1u ? P.hi[pick[std::size_t(k)]] : P.lo[pick[std::size_t(k)]];
        const Eigen::VectorXd eta = S.completeOrthogonalDecomposition().solve(rhs);
        const Eigen::VectorXd xi = P.A * eta;
        if (((xi - P.lo).array() >= -1e-8).all() && ((P.hi - xi).array() >= -1e-8).all())
          return true;
      }
      return false;
    }
    for (Eigen::Index i = start; i < m; ++i) {
      pick[std::size_t(depth)] = int(i);
      if (rec(i + 1, depth + 1))
        return true;
    }
    return false;
  };
  return rec(0, 0);
}

} // namespace oracle
