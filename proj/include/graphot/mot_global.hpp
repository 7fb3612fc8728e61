#pragma once

// Multi-marginal transport with one global entropic term: dense iterative
// scaling for small instances and message passing over junction trees.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "graphot/graph.hpp"
#include "graphot/report.hpp"
#include "graphot/tensor.hpp"
#include "graphot/tree_local.hpp"

namespace graphot {

struct MotConstraint {
  VarSet labels;
  LabeledTensor mu;
};

struct MotProblem {
  std::vector<Axis> axes;
  LabeledTensor cost;  // over `axes`
  std::vector<MotConstraint> constraints;
  double epsilon = 1.0;
  /// Replace zero marginal entries by 1e-300 instead of rejecting them.
  bool clamp_zero = false;
};

struct JtProblem {
  std::vector<Axis> axes;
  JunctionTree tree;
  /// Optional cost per clique, over that clique's variables.
  std::vector<std::optional<LabeledTensor>> costs;
  /// Marginals of constrained cliques, over the clique's variables.
  std::map<int, LabeledTensor> marginals;
  double epsilon = 1.0;
  bool clamp_zero = false;
};

std::vector<Violation> validate_problem(const MotProblem& p);
std::vector<Violation> validate_problem(const JtProblem& p);
double c_inf(const MotProblem& p);
/// Sum over cliques of the largest |cost| entry.
double cost_sum_bound(const JtProblem& p);

/// Dense equivalent of a junction-tree problem (summed clique costs).
MotProblem densify(const JtProblem& p, std::size_t cap = kDefaultDenseCap);

/// Sorted axes for a variable set, sizes looked up in `axes`.
std::vector<Axis> axes_for(const VarSet& vars, const std::vector<Axis>& axes);

struct SinkhornOptions {
  double tol = 1e-9;
  long max_iter = 10000;
  Domain domain = Domain::automatic;
  std::size_t cap = kDefaultDenseCap;
};

struct DenseResult {
  LabeledTensor plan;
  std::vector<LabeledTensor> log_u;  // one per constraint
  SolveReport report;
};

DenseResult sinkhorn_full(const MotProblem& p, const SinkhornOptions& opt);

/// Sum of l1 gaps between the projections of `plan` and the constraints.
double dense_residual(const MotProblem& p, const LabeledTensor& plan);

enum class Schedule { round_robin, random };

struct IsbpOptions {
  double tol = 1e-9;
  long max_iter = 100000;
  Schedule schedule = Schedule::round_robin;
  std::uint64_t seed = 0;
};

class IsbpSolver {
 public:
  explicit IsbpSolver(JtProblem problem);

  const JtProblem& problem() const { return p_; }

  /// Log of the clique potential: -C/eps plus log(mu * u) on constrained
  /// cliques.
  const LabeledTensor& log_potential(int c) const { return psi_[c]; }
  /// Replaces log u of a constrained clique.
  void set_log_u(int c, const LabeledTensor& log_u);
  LabeledTensor log_u(int c) const;
  void reset();

  /// Projection of the full joint onto clique c, computed by messages.
  LabeledTensor projection_via_messages(int c) const;
  void update_leaf(int c);

  double residual() const;
  double dual() const;
  /// Per-clique plans.
  std::vector<LabeledTensor> plans() const;
  double cost() const;

  SolveReport solve(const IsbpOptions& opt);

 private:
  struct Message {
    LabeledTensor log_m;  // normalized to unit total mass
    double log_scale = 0.0;
  };

  const Message& message(std::size_t dir) const;
  /// Potential of c times all its incoming messages.
  const Message& total(int c) const;
  LabeledTensor log_belief(int c) const;
  void invalidate_from(int c);

  JtProblem p_;
  std::vector<std::pair<int, int>> dirs_;        // directed edges (from, to)
  std::vector<std::vector<char>> source_side_;  // cliques behind `from`
  std::vector<std::vector<std::size_t>> into_;  // incoming directed edges per clique
  std::vector<LabeledTensor> base_;             // -C/eps per clique
  std::vector<LabeledTensor> log_mu_;           // per clique, zeros if unconstrained
  std::vector<LabeledTensor> psi_;
  mutable std::vector<std::optional<Message>> cache_;
  mutable std::vector<std::optional<Message>> totals_;
};

}  // namespace graphot
