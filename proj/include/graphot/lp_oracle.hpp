#pragma once

// Exact linear-programming reference for small instances.

#include <vector>

#include "graphot/matrix.hpp"
#include "graphot/mot_global.hpp"
#include "graphot/tree_local.hpp"

namespace graphot {

constexpr std::size_t kLpVariableCap = 4096;

struct LpResult {
  double cost = 0.0;
  std::vector<double> x;
};

/// min c.x subject to A x = b, x >= 0, by a two-phase dense simplex with
/// Bland's pivoting rule. ContractError when infeasible or unbounded.
LpResult solve_standard_lp(const Matrix& a, const std::vector<double>& b,
                           const std::vector<double>& c);

struct TreeLpResult {
  double cost = 0.0;
  std::vector<Matrix> plans;  // edge order, rows = first endpoint
};

/// Unregularized coupled bi-marginal problem on a tree. CapacityError above
/// `cap` variables.
TreeLpResult lp_oracle(const TreeProblem& p, std::size_t cap = kLpVariableCap);

struct MotLpResult {
  double cost = 0.0;
  LabeledTensor plan;
};

/// Unregularized dense multi-marginal problem.
MotLpResult lp_oracle(const MotProblem& p, std::size_t cap = kLpVariableCap);

}  // namespace graphot
