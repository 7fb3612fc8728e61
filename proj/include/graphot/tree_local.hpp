#pragma once

// Coupled bi-marginal transport on a tree with per-edge entropic
// regularization, solved by alternating dual updates on the two color
// classes of the tree.

#include <map>
#include <optional>
#include <vector>

#include "graphot/graph.hpp"
#include "graphot/matrix.hpp"
#include "graphot/report.hpp"

namespace graphot {

struct TreeProblem {
  TreeGraph graph;
  std::map<NodeId, std::size_t> sizes;
  /// costs[e] is indexed (x_j, x_k) for graph.edges[e] = (j, k).
  std::vector<Matrix> costs;
  /// Marginals of the constrained nodes.
  std::map<NodeId, std::vector<double>> marginals;
  double epsilon = 1.0;
};

/// Marginal entries must be positive unless `allow_zero`.
std::vector<Violation> validate_problem(const TreeProblem& p, bool allow_zero = false);
/// Largest |C| entry over all edges.
double c_inf(const TreeProblem& p);
/// Largest node size.
std::size_t max_size(const TreeProblem& p);

/// Parameter recipe for a target accuracy delta.
double recipe_epsilon(double delta, std::size_t num_edges, std::size_t d);
double recipe_delta_prime(double delta, double c_inf);
double iteration_bound(std::size_t num_edges, double c_inf, double delta_prime, double epsilon);

/// exp(-C/eps). NumericError if a row or column underflows to zero entirely.
Matrix kernel(const Matrix& cost, double epsilon);

enum class Domain { linear, log, automatic };
enum class UpdateForm { scaling, closed_form };

struct TreeSolverOptions {
  double delta_prime = 1e-6;
  long max_iter = 100000;
  int threads = 1;
  Domain domain = Domain::automatic;
  UpdateForm form = UpdateForm::scaling;
  /// Keep dual, mass and range traces (residual is always traced).
  bool instrument = true;
};

struct TreeResidual {
  double constrained = 0.0;
  double free = 0.0;
  double total() const { return constrained + free; }
};

class TreeSolver {
 public:
  TreeSolver(TreeProblem problem, Domain domain = Domain::automatic);

  const TreeProblem& problem() const { return p_; }
  const BipartitePartition& partition() const { return part_; }
  bool log_domain() const { return log_domain_; }
  int threads() const { return threads_; }
  void set_threads(int n) { threads_ = n < 1 ? 1 : n; }

  /// Dual state access. log u for the directed edge (j, k) lives over x_j.
  const std::vector<double>& log_u(NodeId j, NodeId k) const;
  void set_log_u(NodeId j, NodeId k, std::vector<double> v);
  double rho(NodeId j) const;
  void set_rho(NodeId j, double v);
  void reset();

  Matrix plan(NodeId j, NodeId k) const;
  /// Row marginal B_(j,k) 1 over x_j.
  std::vector<double> q(NodeId j, NodeId k) const;

  void update_constrained(NodeId j, UpdateForm form = UpdateForm::scaling);
  void update_free(NodeId j, UpdateForm form = UpdateForm::scaling);
  /// Updates every node of color class `side` (1 or 2).
  void update_partition(int side, UpdateForm form = UpdateForm::scaling);

  TreeResidual residual() const;
  double dual_f() const;
  double max_mass_deviation() const;
  double max_lambda_range() const;
  /// Sum over edges of <C, B>.
  double cost() const;
  std::vector<Matrix> plans() const;

  SolveReport solve(const TreeSolverOptions& opt);

 private:
  struct Slot {
    NodeId from;
    NodeId to;
    std::size_t edge;
    bool forward;  // true when `from` is the first endpoint of the edge
  };

  void configure_domain(Domain domain);
  std::size_t slot(NodeId j, NodeId k) const;
  std::size_t reverse(std::size_t s) const { return s ^ 1u; }
  // log of K_(j,k) (u_(k,j) . gamma_k), a vector over x_j.
  std::vector<double> log_w(std::size_t s) const;
  std::vector<double> log_q(std::size_t s) const;
  const std::vector<double>& log_gamma(NodeId j) const;

  TreeProblem p_;
  BipartitePartition part_;
  bool log_domain_ = false;
  int threads_ = 1;
  std::vector<Slot> slots_;
  std::map<std::pair<NodeId, NodeId>, std::size_t> slot_index_;
  std::map<NodeId, std::vector<std::size_t>> out_slots_;
  std::map<NodeId, std::vector<double>> log_gamma_;
  std::vector<Matrix> kernels_;
  std::vector<Matrix> scaled_costs_;  // -C / eps
  std::vector<std::vector<double>> log_u_;
  std::map<NodeId, double> rho_;
};

}  // namespace graphot
