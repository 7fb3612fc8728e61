#include "graphot/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace graphot {

VarSet make_varset(std::vector<Label> vars) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

VarSet intersect(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(const VarSet& a, const VarSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::string to_string(const VarSet& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

std::string format_violations(const std::vector<Violation>& v) {
  std::ostringstream os;
  for (const auto& x : v) os << x.rule << ": " << x.message << '\n';
  return os.str();
}

namespace {

// Structural tree check over vertices 0..n-1. Returns adjacency lists sorted
// ascending; violations are appended.
std::vector<std::vector<int>> check_tree(int n, const std::vector<std::pair<int, int>>& edges,
                                         const std::string& what,
                                         std::vector<Violation>& out) {
  std::vector<std::vector<int>> adj(n);
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      out.push_back({"edge-endpoint", what + " edge (" + std::to_string(a) + "," +
                                          std::to_string(b) + ") references an unknown vertex"});
      continue;
    }
    if (a == b) {
      out.push_back({"self-loop", what + " edge on vertex " + std::to_string(a)});
      continue;
    }
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      out.push_back({"duplicate-edge", what + " edge (" + std::to_string(a) + "," +
                                           std::to_string(b) + ") appears twice"});
      continue;
    }
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& l : adj) std::sort(l.begin(), l.end());
  if (n == 0) {
    out.push_back({"empty", what + " has no vertices"});
    return adj;
  }
  if (seen.size() != static_cast<std::size_t>(n - 1)) {
    out.push_back({"tree-edge-count", what + " has " + std::to_string(seen.size()) +
                                          " edges but a tree on " + std::to_string(n) +
                                          " vertices needs " + std::to_string(n - 1)});
  }
  std::vector<char> vis(n, 0);
  std::deque<int> q{0};
  vis[0] = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : adj[v])
      if (!vis[w]) vis[w] = 1, q.push_back(w);
  }
  for (int v = 0; v < n; ++v)
    if (!vis[v]) {
      out.push_back({"tree-connected", what + " vertex " + std::to_string(v) +
                                           " is not reachable from vertex 0"});
      break;
    }
  return adj;
}

std::vector<int> tree_path(const std::vector<std::vector<int>>& adj, int from, int to) {
  std::vector<int> parent(adj.size(), -2);
  std::deque<int> q{from};
  parent[from] = -1;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    if (v == to) break;
    for (int w : adj[v])
      if (parent[w] == -2) parent[w] = v, q.push_back(w);
  }
  std::vector<int> path;
  if (parent[to] == -2) return path;
  for (int v = to; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

void check_running_intersection(const std::vector<VarSet>& sets,
                                const std::vector<std::vector<int>>& adj,
                                std::vector<Violation>& out) {
  int n = static_cast<int>(sets.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      VarSet s = intersect(sets[i], sets[j]);
      if (s.empty()) continue;
      auto path = tree_path(adj, i, j);
      for (int k : path) {
        if (!is_subset(s, sets[k])) {
          out.push_back({"running-intersection",
                         "clique " + std::to_string(k) + " on the path between cliques " +
                             std::to_string(i) + " and " + std::to_string(j) +
                             " does not contain their intersection " + to_string(s)});
          break;
        }
      }
    }
}

void check_family(const std::vector<VarSet>& factors, const std::vector<VarSet>& sets,
                  const std::vector<int>& allowed, std::vector<Violation>& out) {
  for (std::size_t f = 0; f < factors.size(); ++f) {
    bool ok = false;
    for (int c : allowed) ok = ok || is_subset(factors[f], sets[c]);
    if (!ok)
      out.push_back({"family-preservation", "factor " + std::to_string(f) + " " +
                                                to_string(factors[f]) +
                                                " is not contained in any clique"});
  }
}

}  // namespace

bool TreeGraph::has_node(NodeId j) const {
  return std::find(nodes.begin(), nodes.end(), j) != nodes.end();
}

bool TreeGraph::is_constrained(NodeId j) const {
  return std::find(constrained.begin(), constrained.end(), j) != constrained.end();
}

std::vector<NodeId> TreeGraph::neighbors(NodeId j) const {
  std::vector<NodeId> out;
  for (auto [a, b] : edges) {
    if (a == j) out.push_back(b);
    if (b == j) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t TreeGraph::degree(NodeId j) const { return neighbors(j).size(); }

int BipartitePartition::side(NodeId j) const {
  if (std::binary_search(s1.begin(), s1.end(), j)) return 1;
  if (std::binary_search(s2.begin(), s2.end(), j)) return 2;
  return 0;
}

BipartitePartition two_color(const TreeGraph& t) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (NodeId v : t.nodes) adj[v];
  for (auto [a, b] : t.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& [v, l] : adj) std::sort(l.begin(), l.end());
  std::map<NodeId, int> color;
  for (auto& [root, unused] : adj) {
    if (color.count(root)) continue;
    color[root] = 1;
    std::deque<NodeId> q{root};
    while (!q.empty()) {
      NodeId v = q.front();
      q.pop_front();
      for (NodeId w : adj[v])
        if (!color.count(w)) color[w] = 3 - color[v], q.push_back(w);
    }
  }
  BipartitePartition p;
  for (auto [v, c] : color) (c == 1 ? p.s1 : p.s2).push_back(v);
  return p;
}

std::vector<Violation> validate_tree(const TreeGraph& t) {
  std::vector<Violation> out;
  std::map<NodeId, int> index;
  for (NodeId v : t.nodes) {
    if (v < 0) out.push_back({"node-id", "node id " + std::to_string(v) + " is negative"});
    if (!index.emplace(v, static_cast<int>(index.size())).second)
      out.push_back({"node-id", "node id " + std::to_string(v) + " is listed twice"});
  }
  std::vector<std::pair<int, int>> e;
  for (auto [a, b] : t.edges) {
    auto ia = index.find(a);
    auto ib = index.find(b);
    e.emplace_back(ia == index.end() ? -1 : ia->second, ib == index.end() ? -1 : ib->second);
  }
  check_tree(static_cast<int>(index.size()), e, "tree", out);
  for (NodeId j : t.constrained) {
    if (!index.count(j)) {
      out.push_back({"constrained-node", "constrained node " + std::to_string(j) + " is not in the tree"});
      continue;
    }
    if (t.degree(j) != 1)
      out.push_back({"constrained-leaf", "constrained node " + std::to_string(j) +
                                             " has degree " + std::to_string(t.degree(j)) +
                                             "; constrained nodes must be leaves"});
  }
  for (auto [a, b] : t.edges)
    if (t.is_constrained(a) && t.is_constrained(b))
      out.push_back({"constrained-edge", "edge (" + std::to_string(a) + "," + std::to_string(b) +
                                             ") joins two constrained nodes"});
  return out;
}

int tree_diameter(const TreeGraph& t) {
  if (t.nodes.empty()) return 0;
  auto far = [&](NodeId s) {
    std::map<NodeId, int> dist{{s, 0}};
    std::deque<NodeId> q{s};
    std::pair<int, NodeId> best{0, s};
    while (!q.empty()) {
      NodeId v = q.front();
      q.pop_front();
      best = std::max(best, {dist[v], v});
      for (NodeId w : t.neighbors(v))
        if (!dist.count(w)) dist[w] = dist[v] + 1, q.push_back(w);
    }
    return best;
  };
  return far(far(*std::min_element(t.nodes.begin(), t.nodes.end())).second).first;
}

std::vector<int> JunctionTree::neighbors(int i) const {
  std::vector<int> out;
  for (auto [a, b] : edges) {
    if (a == i) out.push_back(b);
    if (b == i) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool JunctionTree::is_constrained(int i) const {
  return std::find(constrained.begin(), constrained.end(), i) != constrained.end();
}

VarSet JunctionTree::separator(int i, int j) const { return intersect(cliques[i], cliques[j]); }

std::vector<Violation> validate_jt(const JunctionTree& jt, const std::vector<VarSet>& factors) {
  std::vector<Violation> out;
  int n = static_cast<int>(jt.cliques.size());
  for (int i = 0; i < n; ++i)
    if (jt.cliques[i].empty() || jt.cliques[i] != make_varset(jt.cliques[i]))
      out.push_back({"clique-vars", "clique " + std::to_string(i) +
                                        " must be a non-empty sorted set of distinct labels"});
  auto adj = check_tree(n, jt.edges, "junction tree", out);
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  check_family(factors, jt.cliques, all, out);
  check_running_intersection(jt.cliques, adj, out);
  for (int c : jt.constrained) {
    if (c < 0 || c >= n) {
      out.push_back({"constrained-clique", "constrained clique index " + std::to_string(c) + " out of range"});
      continue;
    }
    if (n > 1 && adj[c].size() != 1)
      out.push_back({"constrained-leaf", "constrained clique " + std::to_string(c) +
                                             " is not a leaf of the junction tree"});
  }
  return out;
}

int tree_width(const JunctionTree& jt) {
  std::size_t w = 0;
  for (const auto& c : jt.cliques) w = std::max(w, c.size());
  return static_cast<int>(w) - 1;
}

std::vector<int> ModifiedJunctionTree::neighbors(int i) const {
  std::vector<int> out;
  for (auto [a, b] : edges) {
    if (a == i) out.push_back(b);
    if (b == i) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> ModifiedJunctionTree::cost_cliques() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (!nodes[i].is_separator) out.push_back(i);
  return out;
}

std::vector<int> ModifiedJunctionTree::separators() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
    if (nodes[i].is_separator) out.push_back(i);
  return out;
}

std::vector<InclusionEntry> inclusion_order(const ModifiedJunctionTree& mjt, int sep,
                                            bool permissive) {
  std::vector<InclusionEntry> order;
  for (int nb : mjt.neighbors(sep))
    order.push_back({nb, intersect(mjt.nodes[sep].vars, mjt.nodes[nb].vars)});
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.intersection.size() > b.intersection.size();
  });
  auto name = [&](const InclusionEntry& e) {
    return "c" + std::to_string(e.neighbor) + "=" + to_string(e.intersection);
  };
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!is_subset(order[i].intersection, order[i - 1].intersection))
      throw AssumptionViolation("inclusion sequence at separator " + std::to_string(sep) +
                                ": intersections " + name(order[i - 1]) + " and " +
                                name(order[i]) + " are not nested");
  }
  if (order.size() >= 2 && order[0].intersection != order[1].intersection &&
      !(permissive && order.size() == 2))
    throw AssumptionViolation("inclusion sequence at separator " + std::to_string(sep) +
                              ": the two largest intersections " + name(order[0]) + " and " +
                              name(order[1]) + " differ");
  const auto& gamma = mjt.nodes[sep].gamma;
  if (gamma && !order.empty() && !is_subset(*gamma, order.back().intersection))
    throw AssumptionViolation("inclusion sequence at separator " + std::to_string(sep) +
                              ": constraint set " + to_string(*gamma) +
                              " is not inside the smallest intersection " + name(order.back()));
  return order;
}

SeparatorPartition separator_partition(const ModifiedJunctionTree& mjt) {
  auto seps = mjt.separators();
  std::map<int, std::vector<int>> adj;
  for (int s : seps) adj[s];
  for (int c : mjt.cost_cliques()) {
    auto nb = mjt.neighbors(c);
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]].push_back(nb[b]);
        adj[nb[b]].push_back(nb[a]);
      }
  }
  for (auto& [v, l] : adj) std::sort(l.begin(), l.end());
  std::map<int, int> color;
  for (auto& [root, unused] : adj) {
    if (color.count(root)) continue;
    color[root] = 1;
    std::deque<int> q{root};
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int w : adj[v]) {
        auto it = color.find(w);
        if (it == color.end()) {
          color[w] = 3 - color[v];
          q.push_back(w);
        } else if (it->second == color[v]) {
          throw ValidationError("separator graph is not bipartite: separators " +
                                std::to_string(v) + " and " + std::to_string(w) +
                                " share a cost clique and the same color");
        }
      }
    }
  }
  SeparatorPartition p;
  for (auto [v, c] : color) (c == 1 ? p.s1 : p.s2).push_back(v);
  return p;
}

std::vector<Violation> validate_mjt(const ModifiedJunctionTree& mjt,
                                    const std::vector<VarSet>& factors, bool permissive) {
  std::vector<Violation> out;
  int n = static_cast<int>(mjt.nodes.size());
  std::vector<VarSet> sets;
  for (int i = 0; i < n; ++i) {
    const auto& v = mjt.nodes[i].vars;
    if (v.empty() || v != make_varset(v))
      out.push_back({"clique-vars", "node " + std::to_string(i) +
                                        " must be a non-empty sorted set of distinct labels"});
    sets.push_back(v);
  }
  auto adj = check_tree(n, mjt.edges, "modified junction tree", out);
  for (auto [a, b] : mjt.edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) continue;
    if (mjt.nodes[a].is_separator == mjt.nodes[b].is_separator)
      out.push_back({"bipartite-alternation",
                     "edge (" + std::to_string(a) + "," + std::to_string(b) + ") joins two " +
                         (mjt.nodes[a].is_separator ? "separators" : "cost cliques")});
  }
  check_family(factors, sets, mjt.cost_cliques(), out);
  check_running_intersection(sets, adj, out);
  for (int c : mjt.cost_cliques())
    if (adj[c].size() != 2)
      out.push_back({"cost-clique-degree", "cost clique " + std::to_string(c) + " " +
                                               to_string(sets[c]) + " has " +
                                               std::to_string(adj[c].size()) +
                                               " separator neighbors; exactly two are required"});
  std::vector<std::pair<int, VarSet>> gammas;
  for (int s : mjt.separators()) {
    const auto& g = mjt.nodes[s].gamma;
    if (adj[s].empty())
      out.push_back({"separator-degree", "separator " + std::to_string(s) + " has no neighbors"});
    if (g) {
      if (g->empty() || *g != make_varset(*g))
        out.push_back({"constraint-set", "separator " + std::to_string(s) +
                                             " has an empty or unsorted constraint set"});
      if (!is_subset(*g, sets[s]))
        out.push_back({"constraint-set", "constraint set " + to_string(*g) +
                                             " is not inside separator " + std::to_string(s)});
      for (const auto& [other, og] : gammas)
        if (!intersect(*g, og).empty())
          out.push_back({"constraint-overlap", "constraint sets of separators " +
                                                   std::to_string(other) + " and " +
                                                   std::to_string(s) + " overlap"});
      gammas.emplace_back(s, *g);
    }
  }
  for (int c : mjt.cost_cliques())
    if (mjt.nodes[c].gamma)
      out.push_back({"constraint-set", "cost clique " + std::to_string(c) +
                                           " carries a constraint set; only separators may"});
  if (!out.empty()) return out;
  for (int s : mjt.separators()) {
    try {
      inclusion_order(mjt, s, permissive);
    } catch (const AssumptionViolation& e) {
      out.push_back({"inclusion-sequence", e.what()});
    }
  }
  try {
    separator_partition(mjt);
  } catch (const ValidationError& e) {
    out.push_back({"separator-bipartite", e.what()});
  }
  return out;
}

}  // namespace graphot
