#pragma once

// Trees, junction trees and modified junction trees, with validators that
// report violations as data.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphot/tensor.hpp"

namespace graphot {

using NodeId = int;
using VarSet = std::vector<Label>;  // kept sorted and unique

VarSet make_varset(std::vector<Label> vars);
VarSet intersect(const VarSet& a, const VarSet& b);
bool is_subset(const VarSet& a, const VarSet& b);
std::string to_string(const VarSet& s);

struct Violation {
  std::string rule;
  std::string message;
};

std::string format_violations(const std::vector<Violation>& v);

struct TreeGraph {
  std::vector<NodeId> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<NodeId> constrained;

  bool has_node(NodeId j) const;
  bool is_constrained(NodeId j) const;
  /// Neighbors in ascending id order.
  std::vector<NodeId> neighbors(NodeId j) const;
  std::size_t degree(NodeId j) const;
};

struct BipartitePartition {
  std::vector<NodeId> s1;
  std::vector<NodeId> s2;

  /// 1 or 2; 0 if j is in neither set.
  int side(NodeId j) const;
};

BipartitePartition two_color(const TreeGraph& t);
std::vector<Violation> validate_tree(const TreeGraph& t);

struct JunctionTree {
  std::vector<VarSet> cliques;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> constrained;

  std::vector<int> neighbors(int i) const;
  bool is_constrained(int i) const;
  VarSet separator(int i, int j) const;
};

std::vector<Violation> validate_jt(const JunctionTree& jt, const std::vector<VarSet>& factors);
int tree_width(const JunctionTree& jt);

struct MjtNode {
  VarSet vars;
  bool is_separator = false;
  std::optional<VarSet> gamma;
};

struct ModifiedJunctionTree {
  std::vector<MjtNode> nodes;
  std::vector<std::pair<int, int>> edges;

  std::vector<int> neighbors(int i) const;
  std::vector<int> cost_cliques() const;
  std::vector<int> separators() const;
};

struct InclusionEntry {
  int neighbor;
  VarSet intersection;
};

/// Neighbors of separator `sep` sorted by intersection size (descending, ties
/// by index). AssumptionViolation if the intersections are not nested, if the
/// two largest differ (unless `permissive` and there are exactly two), or if
/// the constraint set is not inside the smallest intersection.
std::vector<InclusionEntry> inclusion_order(const ModifiedJunctionTree& mjt, int sep,
                                            bool permissive = false);

struct SeparatorPartition {
  std::vector<int> s1;
  std::vector<int> s2;
};

/// Two-colors separators, joining two separators whenever they share a cost
/// clique. BFS from the smallest separator index. ValidationError if the
/// separator graph is not bipartite.
SeparatorPartition separator_partition(const ModifiedJunctionTree& mjt);

std::vector<Violation> validate_mjt(const ModifiedJunctionTree& mjt,
                                    const std::vector<VarSet>& factors,
                                    bool permissive = false);

/// Longest shortest path (in edges) between two nodes of a tree.
int tree_diameter(const TreeGraph& t);

}  // namespace graphot
