#include "graphot/lp_oracle.hpp"

#include <cmath>
#include <limits>

#include "graphot/error.hpp"

namespace graphot {

namespace {

constexpr double kPivotTol = 1e-11;

class Tableau {
 public:
  Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), t_((m + 1) * (n + 1), 0.0), basis_(m) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (n_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, n_); }
  double& obj(std::size_t c) { return at(m_, c); }
  std::size_t& basis(std::size_t r) { return basis_[r]; }

  void pivot(std::size_t r, std::size_t c) {
    double p = at(r, c);
    for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
    }
    basis_[r] = c;
  }

  // Bland's rule over columns [0, limit) and rows not in `dead`.
  void optimize(std::size_t limit, const std::vector<char>& dead) {
    for (;;) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (obj(j) < -kPivotTol) {
          enter = j;
          break;
        }
      if (enter == limit) return;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (dead[i] || at(i, enter) <= kPivotTol) continue;
        double ratio = rhs(i) / at(i, enter);
        if (ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m_) throw ContractError("linear program is unbounded");
      pivot(leave, enter);
    }
  }

 private:
  std::size_t m_, n_;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace

LpResult solve_standard_lp(const Matrix& a, const std::vector<double>& b,
                           const std::vector<double>& c) {
  std::size_t m = a.rows, n = a.cols;
  if (b.size() != m || c.size() != n) throw ShapeError("linear program dimensions disagree");
  Tableau tab(m, n + m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = s * a(i, j);
    tab.at(i, n + i) = 1.0;
    tab.rhs(i) = s * b[i];
    tab.basis(i) = n + i;
  }
  // Phase one: minimize the sum of artificials.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) tab.obj(j) -= tab.at(i, j);
    tab.obj(n + m) -= tab.rhs(i);
  }
  std::vector<char> dead(m, 0);
  tab.optimize(n, dead);
  if (-tab.obj(n + m) > 1e-9) throw ContractError("linear program is infeasible");
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis(i) < n) continue;
    std::size_t j = 0;
    while (j < n && std::abs(tab.at(i, j)) <= kPivotTol) ++j;
    if (j < n)
      tab.pivot(i, j);
    else
      dead[i] = 1;
  }
  // Phase two.
  for (std::size_t j = 0; j <= n + m; ++j) tab.obj(j) = 0.0;
  for (std::size_t j = 0; j < n; ++j) tab.obj(j) = c[j];
  for (std::size_t i = 0; i < m; ++i) {
    if (dead[i]) continue;
    double f = tab.obj(tab.basis(i));
    if (f == 0.0) continue;
    for (std::size_t j = 0; j <= n + m; ++j) tab.obj(j) -= f * tab.at(i, j);
  }
  tab.optimize(n, dead);
  LpResult res;
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (!dead[i] && tab.basis(i) < n) res.x[tab.basis(i)] = tab.rhs(i);
  for (std::size_t j = 0; j < n; ++j) res.cost += c[j] * res.x[j];
  return res;
}

TreeLpResult lp_oracle(const TreeProblem& p, std::size_t cap) {
  auto v = validate_problem(p, true);
  if (!v.empty()) throw ValidationError(format_violations(v));
  const auto& edges = p.graph.edges;
  std::vector<std::size_t> offset(edges.size() + 1, 0);
  for (std::size_t e = 0; e < edges.size(); ++e)
    offset[e + 1] = offset[e] + p.sizes.at(edges[e].first) * p.sizes.at(edges[e].second);
  std::size_t n = offset.back();
  if (n > cap)
    throw CapacityError("tree LP has " + std::to_string(n) + " variables, cap is " +
                        std::to_string(cap) + "; shrink d or the number of edges");

  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  // Adds coefficient `s` for every entry of edge e whose x_j index equals i.
  auto add_marginal = [&](std::vector<double>& row, std::size_t e, NodeId j, std::size_t i, double s) {
    std::size_t r = p.sizes.at(edges[e].first), c = p.sizes.at(edges[e].second);
    if (edges[e].first == j)
      for (std::size_t k = 0; k < c; ++k) row[offset[e] + i * c + k] += s;
    else
      for (std::size_t k = 0; k < r; ++k) row[offset[e] + k * c + i] += s;
  };
  std::vector<std::vector<std::size_t>> incident(p.graph.nodes.size());
  std::map<NodeId, std::size_t> pos;
  for (std::size_t i = 0; i < p.graph.nodes.size(); ++i) pos[p.graph.nodes[i]] = i;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    incident[pos[edges[e].first]].push_back(e);
    incident[pos[edges[e].second]].push_back(e);
  }
  for (NodeId j : p.graph.nodes) {
    const auto& inc = incident[pos[j]];
    std::size_t d = p.sizes.at(j);
    if (p.graph.is_constrained(j)) {
      const auto& mu = p.marginals.at(j);
      for (std::size_t e : inc)
        for (std::size_t i = 0; i < d; ++i) {
          std::vector<double> row(n, 0.0);
          add_marginal(row, e, j, i, 1.0);
          rows.push_back(std::move(row));
          rhs.push_back(mu[i]);
        }
    } else {
      for (std::size_t a = 1; a < inc.size(); ++a)
        for (std::size_t i = 0; i < d; ++i) {
          std::vector<double> row(n, 0.0);
          add_marginal(row, inc[0], j, i, 1.0);
          add_marginal(row, inc[a], j, i, -1.0);
          rows.push_back(std::move(row));
          rhs.push_back(0.0);
        }
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    std::vector<double> row(n, 0.0);
    for (std::size_t k = offset[e]; k < offset[e + 1]; ++k) row[k] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(1.0);
  }
  Matrix a(rows.size(), n);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rows[i][j];
  std::vector<double> c(n);
  for (std::size_t e = 0; e < edges.size(); ++e)
    for (std::size_t k = offset[e]; k < offset[e + 1]; ++k) c[k] = p.costs[e].a[k - offset[e]];
  LpResult lp = solve_standard_lp(a, rhs, c);
  TreeLpResult out;
  out.cost = lp.cost;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    Matrix m(p.sizes.at(edges[e].first), p.sizes.at(edges[e].second));
    for (std::size_t k = offset[e]; k < offset[e + 1]; ++k) m.a[k - offset[e]] = lp.x[k];
    out.plans.push_back(std::move(m));
  }
  return out;
}

MotLpResult lp_oracle(const MotProblem& p, std::size_t cap) {
  MotProblem relaxed = p;
  relaxed.clamp_zero = true;
  auto v = validate_problem(relaxed);
  if (!v.empty()) throw ValidationError(format_violations(v));
  std::size_t n = volume(p.axes);
  if (n > cap)
    throw CapacityError("multi-marginal LP has " + std::to_string(n) + " variables, cap is " +
                        std::to_string(cap) + "; shrink d or the number of marginals");
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (const auto& con : p.constraints) {
    std::size_t m = con.mu.size();
    std::size_t base = rows.size();
    for (std::size_t i = 0; i < m; ++i) {
      rows.emplace_back(n, 0.0);
      rhs.push_back(con.mu[i]);
    }
    // Each full entry maps to its flat position in mu.
    std::vector<double> pos(m);
    for (std::size_t i = 0; i < m; ++i) pos[i] = static_cast<double>(i);
    LabeledTensor where = expand(LabeledTensor(con.mu.axes(), std::move(pos)), p.axes);
    for (std::size_t k = 0; k < n; ++k)
      rows[base + static_cast<std::size_t>(where[k])][k] = 1.0;
  }
  Matrix a(rows.size(), n);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rows[i][j];
  auto cv = p.cost.values();
  LpResult lp = solve_standard_lp(a, rhs, std::vector<double>(cv.begin(), cv.end()));
  return MotLpResult{lp.cost, LabeledTensor(p.axes, lp.x)};
}

}  // namespace graphot
