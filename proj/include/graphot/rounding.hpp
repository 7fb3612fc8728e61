#pragma once

// Feasibility restoration for tree plan families.

#include <vector>

#include "graphot/matrix.hpp"
#include "graphot/tree_local.hpp"

namespace graphot {

/// Returns B' with row sums r and the column sums of B. ContractError when
/// the masses of r and B differ by more than 1e-12.
Matrix round_bimarginal(const Matrix& b, const std::vector<double>& r);

struct RoundReport {
  std::vector<double> moved;  // l1 change per edge
  double cost_before = 0.0;
  double cost_after = 0.0;
  double cost_delta = 0.0;  // |after - before|
  double residual = 0.0;    // residual of the input plans
  double bound = 0.0;       // 2 C_inf residual
};

struct RoundResult {
  std::vector<Matrix> plans;
  RoundReport report;
};

/// Row marginal of plans[e] seen from node j (rows when j is the first
/// endpoint of edge e, columns otherwise).
std::vector<double> node_marginal(const TreeProblem& p, const std::vector<Matrix>& plans,
                                  std::size_t e, NodeId j);

/// Residual of an arbitrary plan family: constrained mismatch plus spread of
/// incident marginals around their arithmetic mean at free nodes.
TreeResidual plan_residual(const TreeProblem& p, const std::vector<Matrix>& plans);

/// Largest l1 disagreement between marginals of plans meeting at one node.
double max_node_disagreement(const TreeProblem& p, const std::vector<Matrix>& plans);
/// Largest l1 gap between a constrained marginal and its plan's marginal.
double max_constraint_gap(const TreeProblem& p, const std::vector<Matrix>& plans);

/// Rounds every edge at its endpoint in `side` toward mu (constrained) or the
/// mean incident marginal of the input plans (free), in ascending node order.
RoundResult round_tree(const TreeProblem& p, const std::vector<Matrix>& plans,
                       const std::vector<NodeId>& side, int threads = 1);

double plans_cost(const TreeProblem& p, const std::vector<Matrix>& plans);

}  // namespace graphot
