#pragma once

// Locally regularized transport over a modified junction tree: one plan per
// cost clique, constraints and consistency enforced on separators.

#include <map>
#include <vector>

#include "graphot/graph.hpp"
#include "graphot/report.hpp"
#include "graphot/tensor.hpp"
#include "graphot/tree_local.hpp"

namespace graphot {

struct GraphLocalProblem {
  ModifiedJunctionTree mjt;
  std::vector<Axis> axes;
  /// Cost per cost-clique node index, over that clique's variables. Missing
  /// entries mean zero cost.
  std::map<int, LabeledTensor> costs;
  /// Marginal per constrained separator, over its constraint set.
  std::map<int, LabeledTensor> marginals;
  double epsilon = 1.0;
  /// Accept two-neighbor separators whose intersections are nested but not
  /// equal.
  bool permissive = false;
};

std::vector<Violation> validate_problem(const GraphLocalProblem& p);
double c_inf(const GraphLocalProblem& p);

/// Each tree node becomes a separator (same index order), each edge a cost
/// clique holding its cost matrix.
GraphLocalProblem encode_tree(const TreeProblem& p);

struct GraphLocalOptions {
  double delta_prime = 1e-6;
  long max_iter = 100000;
  int threads = 1;
  bool instrument = true;
};

struct GraphResidual {
  double constrained = 0.0;
  double consistency = 0.0;
  double total() const { return constrained + consistency; }
};

class GraphLocalSolver {
 public:
  explicit GraphLocalSolver(GraphLocalProblem problem);

  const GraphLocalProblem& problem() const { return p_; }
  const SeparatorPartition& partition() const { return part_; }
  const std::vector<InclusionEntry>& order(int sep) const { return sep_.at(sep).order; }
  void set_threads(int n) { threads_ = n < 1 ? 1 : n; }

  const LabeledTensor& log_u(int sep, std::size_t pos) const;
  void set_log_u(int sep, std::size_t pos, LabeledTensor v);
  /// log u_gamma over the constraint set, or the scalar rho when the
  /// separator is unconstrained.
  const LabeledTensor& log_v(int sep) const;
  void set_log_v(int sep, LabeledTensor v);
  void reset();

  LabeledTensor clique_plan(int c) const;
  LabeledTensor log_clique_plan(int c) const;
  /// Marginal of the kernel-weighted clique `order(sep)[pos]` on its
  /// intersection with `sep`, excluding the dual owned by `sep`.
  LabeledTensor k_message(int sep, std::size_t pos) const;
  void separator_update(int sep);
  void update_partition(int side);

  GraphResidual residual() const;
  double dual() const;
  double max_mass_deviation() const;
  /// Plans in cost_cliques() order.
  std::vector<LabeledTensor> plans() const;
  double cost() const;

  SolveReport solve(const GraphLocalOptions& opt);

 private:
  struct SepState {
    std::vector<InclusionEntry> order;
    std::vector<LabeledTensor> log_u;
    LabeledTensor log_v;
  };
  struct Side {
    int sep;
    std::size_t pos;
  };

  LabeledTensor log_k(int sep, std::size_t pos) const;

  GraphLocalProblem p_;
  SeparatorPartition part_;
  int threads_ = 1;
  std::map<int, SepState> sep_;
  std::map<int, std::vector<Side>> sides_;    // per cost clique, its two duals
  std::map<int, LabeledTensor> log_base_;     // -C/eps + log M per cost clique
};

}  // namespace graphot
