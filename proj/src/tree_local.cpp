#include "graphot/tree_local.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "graphot/parallel.hpp"

namespace graphot {

namespace {

double lse(const std::vector<double>& v) { return log_sum_exp(v); }

std::vector<double> log_vec(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
  return out;
}

constexpr double kAutoLogThreshold = 500.0;

}  // namespace

std::vector<Violation> validate_problem(const TreeProblem& p, bool allow_zero) {
  auto out = validate_tree(p.graph);
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
    out.push_back({"epsilon", "regularization must be positive and finite"});
  for (NodeId j : p.graph.nodes) {
    auto it = p.sizes.find(j);
    if (it == p.sizes.end() || it->second == 0)
      out.push_back({"node-size", "node " + std::to_string(j) + " has no positive size"});
  }
  if (p.costs.size() != p.graph.edges.size()) {
    out.push_back({"edge-cost", "expected " + std::to_string(p.graph.edges.size()) +
                                    " cost matrices, got " + std::to_string(p.costs.size())});
    return out;
  }
  for (std::size_t e = 0; e < p.costs.size(); ++e) {
    auto [a, b] = p.graph.edges[e];
    const auto& c = p.costs[e];
    auto sa = p.sizes.count(a) ? p.sizes.at(a) : 0;
    auto sb = p.sizes.count(b) ? p.sizes.at(b) : 0;
    if (c.rows != sa || c.cols != sb || c.a.size() != sa * sb) {
      out.push_back({"edge-cost", "cost of edge (" + std::to_string(a) + "," + std::to_string(b) +
                                      ") has shape " + std::to_string(c.rows) + "x" +
                                      std::to_string(c.cols) + ", expected " +
                                      std::to_string(sa) + "x" + std::to_string(sb)});
      continue;
    }
    for (double v : c.a)
      if (!std::isfinite(v)) {
        out.push_back({"edge-cost", "cost of edge (" + std::to_string(a) + "," +
                                        std::to_string(b) + ") has a non-finite entry"});
        break;
      }
  }
  for (NodeId j : p.graph.constrained) {
    auto it = p.marginals.find(j);
    if (it == p.marginals.end()) {
      out.push_back({"marginal", "constrained node " + std::to_string(j) + " has no marginal"});
      continue;
    }
    const auto& mu = it->second;
    if (p.sizes.count(j) && mu.size() != p.sizes.at(j))
      out.push_back({"marginal", "marginal of node " + std::to_string(j) + " has " +
                                     std::to_string(mu.size()) + " entries, expected " +
                                     std::to_string(p.sizes.at(j))});
    double s = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < mu.size() && ok; ++i) {
      ok = std::isfinite(mu[i]) && (mu[i] > 0.0 || (allow_zero && mu[i] == 0.0));
      if (!ok)
        out.push_back({"marginal", "marginal of node " + std::to_string(j) + " has entry " +
                                       std::to_string(i) + " = " + std::to_string(mu[i]) +
                                       (allow_zero ? "; entries must be non-negative"
                                                   : "; entries must be positive")});
      s += mu[i];
    }
    if (ok && std::abs(s - 1.0) > 1e-9)
      out.push_back({"marginal", "marginal of node " + std::to_string(j) + " sums to " +
                                     std::to_string(s) + " instead of 1"});
  }
  for (const auto& [j, mu] : p.marginals)
    if (!p.graph.is_constrained(j))
      out.push_back({"marginal", "node " + std::to_string(j) +
                                     " has a marginal but is not constrained"});
  return out;
}

double c_inf(const TreeProblem& p) {
  double m = 0.0;
  for (const auto& c : p.costs) m = std::max(m, c.max_abs());
  return m;
}

std::size_t max_size(const TreeProblem& p) {
  std::size_t d = 1;
  for (const auto& [j, s] : p.sizes) d = std::max(d, s);
  return d;
}

double recipe_epsilon(double delta, std::size_t num_edges, std::size_t d) {
  double ld = std::log(static_cast<double>(std::max<std::size_t>(d, 2)));
  return delta / (4.0 * static_cast<double>(num_edges) * ld);
}

double recipe_delta_prime(double delta, double cinf) {
  return cinf > 0.0 ? delta / (8.0 * cinf) : delta;
}

double iteration_bound(std::size_t num_edges, double cinf, double delta_prime, double epsilon) {
  return 2.0 + 88.0 * static_cast<double>(num_edges) * cinf / (delta_prime * epsilon);
}

Matrix kernel(const Matrix& cost, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("kernel: regularization must be positive");
  Matrix k(cost.rows, cost.cols);
  double mx = 0.0;
  for (std::size_t i = 0; i < cost.a.size(); ++i) {
    k.a[i] = std::exp(-cost.a[i] / epsilon);
    mx = std::max(mx, k.a[i]);
  }
  auto rs = k.row_sums();
  auto cs = k.col_sums();
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (rs[i] == 0.0)
      throw NumericError("kernel row " + std::to_string(i) +
                         " underflows to zero; increase epsilon or use the log domain");
  for (std::size_t j = 0; j < cs.size(); ++j)
    if (cs[j] == 0.0)
      throw NumericError("kernel column " + std::to_string(j) +
                         " underflows to zero; increase epsilon or use the log domain");
  if (mx < 1e-290) warn("kernel maximum " + std::to_string(mx) + " is near underflow");
  return k;
}

TreeSolver::TreeSolver(TreeProblem problem, Domain domain) : p_(std::move(problem)) {
  auto v = validate_problem(p_);
  if (!v.empty()) throw ValidationError("invalid tree problem:\n" + format_violations(v));
  part_ = two_color(p_.graph);
  for (std::size_t e = 0; e < p_.graph.edges.size(); ++e) {
    auto [a, b] = p_.graph.edges[e];
    slots_.push_back({a, b, e, true});
    slots_.push_back({b, a, e, false});
    slot_index_[{a, b}] = 2 * e;
    slot_index_[{b, a}] = 2 * e + 1;
    out_slots_[a].push_back(2 * e);
    out_slots_[b].push_back(2 * e + 1);
  }
  for (auto& [j, l] : out_slots_)
    std::sort(l.begin(), l.end(), [&](std::size_t x, std::size_t y) {
      return slots_[x].to < slots_[y].to;
    });
  for (NodeId j : p_.graph.nodes) {
    if (p_.graph.is_constrained(j))
      log_gamma_[j] = log_vec(p_.marginals.at(j));
    else
      log_gamma_[j] = std::vector<double>(p_.sizes.at(j), 0.0);
  }
  for (const auto& c : p_.costs) {
    Matrix s(c.rows, c.cols);
    for (std::size_t i = 0; i < c.a.size(); ++i) s.a[i] = -c.a[i] / p_.epsilon;
    scaled_costs_.push_back(std::move(s));
  }
  configure_domain(domain);
  reset();
}

void TreeSolver::configure_domain(Domain domain) {
  log_domain_ = domain == Domain::log ||
                (domain == Domain::automatic && c_inf(p_) / p_.epsilon > kAutoLogThreshold);
  if (!log_domain_ && kernels_.empty())
    for (const auto& c : p_.costs) kernels_.push_back(kernel(c, p_.epsilon));
}

void TreeSolver::reset() {
  log_u_.assign(slots_.size(), {});
  for (std::size_t s = 0; s < slots_.size(); ++s)
    log_u_[s].assign(p_.sizes.at(slots_[s].from), 0.0);
  rho_.clear();
  for (NodeId j : p_.graph.nodes)
    if (!p_.graph.is_constrained(j)) rho_[j] = 0.0;
}

std::size_t TreeSolver::slot(NodeId j, NodeId k) const {
  auto it = slot_index_.find({j, k});
  if (it == slot_index_.end())
    throw ArgumentError("(" + std::to_string(j) + "," + std::to_string(k) + ") is not an edge");
  return it->second;
}

const std::vector<double>& TreeSolver::log_u(NodeId j, NodeId k) const {
  return log_u_[slot(j, k)];
}

void TreeSolver::set_log_u(NodeId j, NodeId k, std::vector<double> v) {
  auto s = slot(j, k);
  if (v.size() != log_u_[s].size()) throw ShapeError("set_log_u: wrong length");
  log_u_[s] = std::move(v);
}

double TreeSolver::rho(NodeId j) const {
  auto it = rho_.find(j);
  if (it == rho_.end()) throw ArgumentError("node " + std::to_string(j) + " has no rho");
  return it->second;
}

void TreeSolver::set_rho(NodeId j, double v) {
  auto it = rho_.find(j);
  if (it == rho_.end()) throw ArgumentError("node " + std::to_string(j) + " has no rho");
  it->second = v;
}

const std::vector<double>& TreeSolver::log_gamma(NodeId j) const { return log_gamma_.at(j); }

std::vector<double> TreeSolver::log_w(std::size_t s) const {
  const Slot& sl = slots_[s];
  const auto& lu = log_u_[reverse(s)];
  const auto& lg = log_gamma(sl.to);
  std::size_t n = p_.sizes.at(sl.from);
  std::size_t m = lu.size();
  std::vector<double> b(m);
  for (std::size_t l = 0; l < m; ++l) b[l] = lu[l] + lg[l];
  std::vector<double> out(n);
  if (log_domain_) {
    const Matrix& sc = scaled_costs_[sl.edge];
    std::vector<double> tmp(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < m; ++l) tmp[l] = (sl.forward ? sc(i, l) : sc(l, i)) + b[l];
      out[i] = lse(tmp);
    }
    return out;
  }
  double shift = *std::max_element(b.begin(), b.end());
  for (double& x : b) x = std::exp(x - shift);
  const Matrix& k = kernels_[sl.edge];
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    if (sl.forward)
      for (std::size_t l = 0; l < m; ++l) acc += k(i, l) * b[l];
    else
      for (std::size_t l = 0; l < m; ++l) acc += k(l, i) * b[l];
    if (!(acc > 0.0) || !std::isfinite(acc))
      throw NumericError("kernel product vanished at node " + std::to_string(sl.from) +
                         " entry " + std::to_string(i) +
                         "; increase epsilon or use the log domain");
    out[i] = std::log(acc) + shift;
  }
  return out;
}

std::vector<double> TreeSolver::log_q(std::size_t s) const {
  auto w = log_w(s);
  const auto& lu = log_u_[s];
  const auto& lg = log_gamma(slots_[s].from);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += lu[i] + lg[i];
  return w;
}

std::vector<double> TreeSolver::q(NodeId j, NodeId k) const {
  auto lq = log_q(slot(j, k));
  for (double& x : lq) x = std::exp(x);
  return lq;
}

Matrix TreeSolver::plan(NodeId j, NodeId k) const {
  std::size_t s = slot(j, k);
  const Slot& sl = slots_[s];
  const auto& a = log_u_[s];
  const auto& b = log_u_[reverse(s)];
  const auto& ga = log_gamma(j);
  const auto& gb = log_gamma(k);
  const Matrix& sc = scaled_costs_[sl.edge];
  Matrix out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t l = 0; l < b.size(); ++l)
      out(i, l) = std::exp(a[i] + ga[i] + (sl.forward ? sc(i, l) : sc(l, i)) + b[l] + gb[l]);
  return out;
}

std::vector<Matrix> TreeSolver::plans() const {
  std::vector<Matrix> out;
  for (auto [a, b] : p_.graph.edges) out.push_back(plan(a, b));
  return out;
}

void TreeSolver::update_constrained(NodeId j, UpdateForm form) {
  if (!p_.graph.is_constrained(j))
    throw ArgumentError("node " + std::to_string(j) + " is not constrained");
  std::size_t s = out_slots_.at(j).front();
  auto lw = log_w(s);
  auto& lu = log_u_[s];
  if (form == UpdateForm::closed_form) {
    for (std::size_t i = 0; i < lu.size(); ++i) lu[i] = -lw[i];
    return;
  }
  const auto& lg = log_gamma(j);
  for (std::size_t i = 0; i < lu.size(); ++i) {
    double lq = lu[i] + lg[i] + lw[i];
    lu[i] = lu[i] + lg[i] - lq;
  }
}

void TreeSolver::update_free(NodeId j, UpdateForm form) {
  if (p_.graph.is_constrained(j))
    throw ArgumentError("node " + std::to_string(j) + " is constrained");
  auto it = out_slots_.find(j);
  if (it == out_slots_.end()) return;
  const auto& sl = it->second;
  std::size_t n = sl.size();
  std::size_t d = p_.sizes.at(j);
  double dn = static_cast<double>(n);
  std::vector<std::vector<double>> lw(n);
  for (std::size_t k = 0; k < n; ++k) lw[k] = log_w(sl[k]);
  double& rho = rho_.at(j);
  if (form == UpdateForm::closed_form) {
    std::vector<double> lv(d, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < d; ++i) lv[i] += lw[k][i];
    for (double& x : lv) x /= dn;
    rho = -dn * lse(lv);
    for (std::size_t k = 0; k < n; ++k) {
      auto& lu = log_u_[sl[k]];
      for (std::size_t i = 0; i < d; ++i) lu[i] = rho / dn + lv[i] - lw[k][i];
    }
    return;
  }
  std::vector<std::vector<double>> lq(n, std::vector<double>(d));
  std::vector<double> lg(d, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& lu = log_u_[sl[k]];
    for (std::size_t i = 0; i < d; ++i) {
      lq[k][i] = lu[i] + lw[k][i];
      lg[i] += lq[k][i];
    }
  }
  for (double& x : lg) x /= dn;
  double norm = lse(lg);
  for (std::size_t k = 0; k < n; ++k) {
    auto& lu = log_u_[sl[k]];
    for (std::size_t i = 0; i < d; ++i) lu[i] = lu[i] + (lg[i] - norm) - lq[k][i];
  }
  rho -= dn * norm;
}

void TreeSolver::update_partition(int side, UpdateForm form) {
  const auto& nodes = side == 1 ? part_.s1 : part_.s2;
  parallel_for(nodes.size(), threads_, [&](std::size_t i) {
    NodeId j = nodes[i];
    if (p_.graph.is_constrained(j))
      update_constrained(j, form);
    else
      update_free(j, form);
  });
}

TreeResidual TreeSolver::residual() const {
  TreeResidual r;
  for (const auto& [j, sl] : out_slots_) {
    if (p_.graph.is_constrained(j)) {
      auto lq = log_q(sl.front());
      const auto& mu = p_.marginals.at(j);
      for (std::size_t i = 0; i < lq.size(); ++i) r.constrained += std::abs(std::exp(lq[i]) - mu[i]);
      continue;
    }
    std::size_t d = p_.sizes.at(j);
    std::vector<std::vector<double>> qs;
    std::vector<double> mean(d, 0.0);
    for (std::size_t s : sl) {
      auto lq = log_q(s);
      for (std::size_t i = 0; i < d; ++i) {
        lq[i] = std::exp(lq[i]);
        mean[i] += lq[i];
      }
      qs.push_back(std::move(lq));
    }
    for (double& x : mean) x /= static_cast<double>(sl.size());
    for (const auto& qk : qs)
      for (std::size_t i = 0; i < d; ++i) r.free += std::abs(qk[i] - mean[i]);
  }
  return r;
}

double TreeSolver::dual_f() const {
  double f = 0.0;
  for (std::size_t e = 0; e < p_.graph.edges.size(); ++e) {
    auto lq = log_q(2 * e);
    for (double x : lq) f += std::exp(x);
  }
  for (NodeId j : p_.graph.constrained) {
    const auto& lu = log_u_[out_slots_.at(j).front()];
    const auto& mu = p_.marginals.at(j);
    for (std::size_t i = 0; i < lu.size(); ++i) f -= lu[i] * mu[i];
  }
  for (const auto& [j, r] : rho_) f -= r;
  return f;
}

double TreeSolver::max_mass_deviation() const {
  double m = 0.0;
  for (std::size_t e = 0; e < p_.graph.edges.size(); ++e) {
    auto lq = log_q(2 * e);
    double s = 0.0;
    for (double x : lq) s += std::exp(x);
    m = std::max(m, std::abs(s - 1.0));
  }
  return m;
}

double TreeSolver::max_lambda_range() const {
  double m = 0.0;
  for (const auto& lu : log_u_) {
    auto [lo, hi] = std::minmax_element(lu.begin(), lu.end());
    m = std::max(m, p_.epsilon * (*hi - *lo));
  }
  return m;
}

double TreeSolver::cost() const {
  double c = 0.0;
  for (std::size_t e = 0; e < p_.graph.edges.size(); ++e) {
    auto [a, b] = p_.graph.edges[e];
    c += frobenius_inner(p_.costs[e], plan(a, b));
  }
  return c;
}

SolveReport TreeSolver::solve(const TreeSolverOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  set_threads(opt.threads);
  configure_domain(opt.domain);
  reset();
  SolveReport rep;
  rep.solver = "tree-local";
  rep.epsilon = p_.epsilon;
  rep.delta_prime = opt.delta_prime;
  rep.c_inf = c_inf(p_);
  rep.iteration_bound = iteration_bound(p_.graph.edges.size(), rep.c_inf, opt.delta_prime, p_.epsilon);
  rep.threads = threads_;
  rep.log_domain = log_domain_;
  long t = 0;
  while (true) {
    double e = residual().total();
    rep.residual_trace.push_back(e);
    rep.elapsed_trace.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (opt.instrument) {
      rep.dual_trace.push_back(dual_f());
      rep.mass_deviation_trace.push_back(max_mass_deviation());
      rep.lambda_range_trace.push_back(max_lambda_range());
    }
    rep.final_residual = e;
    if (t >= 1 && e < opt.delta_prime) {
      rep.converged = true;
      break;
    }
    if (t >= opt.max_iter) break;
    ++t;
    int side = (t % 2 == 1) ? 1 : 2;
    update_partition(side, opt.form);
    rep.last_partition = side;
  }
  rep.iterations = t;
  rep.cost = cost();
  rep.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace graphot
