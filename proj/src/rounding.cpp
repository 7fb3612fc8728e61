#include "graphot/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "graphot/parallel.hpp"

namespace graphot {

Matrix round_bimarginal(const Matrix& b, const std::vector<double>& r) {
  if (r.size() != b.rows) throw ShapeError("round_bimarginal: target has wrong length");
  double mr = 0.0;
  for (double v : r) mr += v;
  double mb = b.sum();
  if (std::abs(mr - mb) > 1e-12)
    throw ContractError("round_bimarginal: target mass " + std::to_string(mr) +
                        " differs from plan mass " + std::to_string(mb));
  auto c = b.col_sums();
  Matrix f = b;
  auto rs = f.row_sums();
  for (std::size_t i = 0; i < f.rows; ++i) {
    double x = rs[i] > r[i] ? r[i] / rs[i] : 1.0;
    for (std::size_t j = 0; j < f.cols; ++j) f(i, j) *= x;
  }
  auto cs = f.col_sums();
  for (std::size_t j = 0; j < f.cols; ++j) {
    double y = cs[j] > c[j] ? c[j] / cs[j] : 1.0;
    for (std::size_t i = 0; i < f.rows; ++i) f(i, j) *= y;
  }
  rs = f.row_sums();
  cs = f.col_sums();
  std::vector<double> er(f.rows), ec(f.cols);
  double norm = 0.0;
  for (std::size_t i = 0; i < f.rows; ++i) {
    er[i] = r[i] - rs[i];
    norm += std::abs(er[i]);
  }
  for (std::size_t j = 0; j < f.cols; ++j) ec[j] = c[j] - cs[j];
  if (norm <= 1e-15) return f;
  for (std::size_t i = 0; i < f.rows; ++i)
    for (std::size_t j = 0; j < f.cols; ++j) f(i, j) += er[i] * ec[j] / norm;
  return f;
}

std::vector<double> node_marginal(const TreeProblem& p, const std::vector<Matrix>& plans,
                                  std::size_t e, NodeId j) {
  return p.graph.edges[e].first == j ? plans[e].row_sums() : plans[e].col_sums();
}

namespace {

std::map<NodeId, std::vector<std::size_t>> incident(const TreeProblem& p) {
  std::map<NodeId, std::vector<std::size_t>> inc;
  for (std::size_t e = 0; e < p.graph.edges.size(); ++e) {
    inc[p.graph.edges[e].first].push_back(e);
    inc[p.graph.edges[e].second].push_back(e);
  }
  return inc;
}

std::vector<double> mean_marginal(const TreeProblem& p, const std::vector<Matrix>& plans,
                                  const std::vector<std::size_t>& edges, NodeId j) {
  std::vector<double> m;
  for (std::size_t e : edges) {
    auto q = node_marginal(p, plans, e, j);
    if (m.empty()) m.assign(q.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) m[i] += q[i];
  }
  for (double& x : m) x /= static_cast<double>(edges.size());
  return m;
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

TreeResidual plan_residual(const TreeProblem& p, const std::vector<Matrix>& plans) {
  TreeResidual r;
  for (const auto& [j, edges] : incident(p)) {
    if (p.graph.is_constrained(j)) {
      r.constrained += l1(node_marginal(p, plans, edges.front(), j), p.marginals.at(j));
      continue;
    }
    auto m = mean_marginal(p, plans, edges, j);
    for (std::size_t e : edges) r.free += l1(node_marginal(p, plans, e, j), m);
  }
  return r;
}

double max_node_disagreement(const TreeProblem& p, const std::vector<Matrix>& plans) {
  double worst = 0.0;
  for (const auto& [j, edges] : incident(p))
    for (std::size_t a = 0; a < edges.size(); ++a)
      for (std::size_t b = a + 1; b < edges.size(); ++b)
        worst = std::max(worst, l1(node_marginal(p, plans, edges[a], j),
                                   node_marginal(p, plans, edges[b], j)));
  return worst;
}

double max_constraint_gap(const TreeProblem& p, const std::vector<Matrix>& plans) {
  double worst = 0.0;
  auto inc = incident(p);
  for (NodeId j : p.graph.constrained)
    worst = std::max(worst, l1(node_marginal(p, plans, inc.at(j).front(), j), p.marginals.at(j)));
  return worst;
}

double plans_cost(const TreeProblem& p, const std::vector<Matrix>& plans) {
  double c = 0.0;
  for (std::size_t e = 0; e < plans.size(); ++e) c += frobenius_inner(p.costs[e], plans[e]);
  return c;
}

RoundResult round_tree(const TreeProblem& p, const std::vector<Matrix>& plans,
                       const std::vector<NodeId>& side, int threads) {
  if (plans.size() != p.graph.edges.size())
    throw ShapeError("round_tree: one plan per edge is required");
  RoundResult out;
  out.plans = plans;
  auto inc = incident(p);
  std::vector<NodeId> nodes = side;
  std::sort(nodes.begin(), nodes.end());
  for (std::size_t a = 0; a < p.graph.edges.size(); ++a) {
    auto [x, y] = p.graph.edges[a];
    bool in_x = std::binary_search(nodes.begin(), nodes.end(), x);
    bool in_y = std::binary_search(nodes.begin(), nodes.end(), y);
    if (in_x == in_y)
      throw ContractError("round_tree: edge (" + std::to_string(x) + "," + std::to_string(y) +
                          ") must have exactly one endpoint in the rounded side");
  }
  parallel_for(nodes.size(), threads, [&](std::size_t n) {
    NodeId j = nodes[n];
    auto it = inc.find(j);
    if (it == inc.end()) return;
    std::vector<double> target = p.graph.is_constrained(j)
                                     ? p.marginals.at(j)
                                     : mean_marginal(p, plans, it->second, j);
    for (std::size_t e : it->second) {
      if (p.graph.edges[e].first == j) {
        out.plans[e] = round_bimarginal(plans[e], target);
      } else {
        out.plans[e] = round_bimarginal(plans[e].transposed(), target).transposed();
      }
    }
  });
  auto& rep = out.report;
  for (std::size_t e = 0; e < plans.size(); ++e) {
    double m = 0.0;
    for (std::size_t i = 0; i < plans[e].a.size(); ++i)
      m += std::abs(plans[e].a[i] - out.plans[e].a[i]);
    rep.moved.push_back(m);
  }
  rep.cost_before = plans_cost(p, plans);
  rep.cost_after = plans_cost(p, out.plans);
  rep.cost_delta = std::abs(rep.cost_after - rep.cost_before);
  rep.residual = plan_residual(p, plans).total();
  rep.bound = 2.0 * c_inf(p) * rep.residual;
  return out;
}

}  // namespace graphot
