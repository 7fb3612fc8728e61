#include "graphot/graph_local.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "graphot/mot_global.hpp"
#include "graphot/parallel.hpp"

namespace graphot {

namespace {

LabeledTensor scaled(const LabeledTensor& t, double f) {
  return map(t, [f](double v) { return v * f; });
}

LabeledTensor minus(const LabeledTensor& a, const LabeledTensor& b) {
  return broadcast_add(a, scaled(b, -1.0));
}

void require_finite(const LabeledTensor& t, int sep) {
  for (double v : t.values())
    if (!std::isfinite(v))
      throw NumericError("separator " + std::to_string(sep) +
                         ": a projection vanished or overflowed; increase epsilon");
}

}  // namespace

std::vector<Violation> validate_problem(const GraphLocalProblem& p) {
  std::vector<VarSet> factors;
  int n = static_cast<int>(p.mjt.nodes.size());
  for (const auto& [c, t] : p.costs)
    if (c >= 0 && c < n) factors.push_back(p.mjt.nodes[c].vars);
  auto out = validate_mjt(p.mjt, factors, p.permissive);
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
    out.push_back({"epsilon", "regularization must be positive and finite"});
  for (int i = 0; i < n; ++i)
    for (Label l : p.mjt.nodes[i].vars) {
      bool found = false;
      for (const auto& a : p.axes) found = found || a.label == l;
      if (!found)
        out.push_back({"axis", "node " + std::to_string(i) + " uses undeclared variable " +
                                   std::to_string(l)});
    }
  for (const auto& [c, t] : p.costs) {
    if (c < 0 || c >= n || p.mjt.nodes[c].is_separator) {
      out.push_back({"cost", "cost attached to " + std::to_string(c) + ", which is not a cost clique"});
      continue;
    }
    bool ok = t.rank() == p.mjt.nodes[c].vars.size();
    for (Label l : p.mjt.nodes[c].vars) ok = ok && t.has_label(l);
    if (!ok)
      out.push_back({"cost", "cost of clique " + std::to_string(c) + " must span exactly " +
                                 to_string(p.mjt.nodes[c].vars)});
    for (double v : t.values())
      if (!std::isfinite(v)) {
        out.push_back({"cost", "cost of clique " + std::to_string(c) + " has a non-finite entry"});
        break;
      }
  }
  for (int s = 0; s < n; ++s) {
    const auto& g = p.mjt.nodes[s].gamma;
    if (!g) continue;
    auto it = p.marginals.find(s);
    if (it == p.marginals.end()) {
      out.push_back({"marginal", "constrained separator " + std::to_string(s) + " has no marginal"});
      continue;
    }
    bool ok = it->second.rank() == g->size();
    for (Label l : *g) ok = ok && it->second.has_label(l);
    if (!ok) {
      out.push_back({"marginal", "marginal of separator " + std::to_string(s) +
                                     " must span exactly " + to_string(*g)});
      continue;
    }
    double sum = 0.0;
    bool positive = true;
    for (std::size_t i = 0; i < it->second.size() && positive; ++i) {
      double v = it->second[i];
      positive = v > 0.0 && std::isfinite(v);
      if (!positive)
        out.push_back({"marginal", "marginal of separator " + std::to_string(s) + " has entry " +
                                       std::to_string(i) + " = " + std::to_string(v) +
                                       "; entries must be positive"});
      sum += v;
    }
    if (positive && std::abs(sum - 1.0) > 1e-9)
      out.push_back({"marginal", "marginal of separator " + std::to_string(s) + " sums to " +
                                     std::to_string(sum) + " instead of 1"});
  }
  for (const auto& [s, mu] : p.marginals)
    if (s < 0 || s >= n || !p.mjt.nodes[s].gamma)
      out.push_back({"marginal", "node " + std::to_string(s) +
                                     " has a marginal but no constraint set"});
  return out;
}

double c_inf(const GraphLocalProblem& p) {
  double m = 0.0;
  for (const auto& [c, t] : p.costs)
    for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

GraphLocalProblem encode_tree(const TreeProblem& tp) {
  GraphLocalProblem g;
  std::vector<NodeId> nodes = tp.graph.nodes;
  std::sort(nodes.begin(), nodes.end());
  std::map<NodeId, int> index;
  for (NodeId j : nodes) {
    index[j] = static_cast<int>(g.mjt.nodes.size());
    MjtNode s{{j}, true, std::nullopt};
    if (tp.graph.is_constrained(j)) s.gamma = VarSet{j};
    g.mjt.nodes.push_back(s);
    g.axes.push_back(Axis{j, tp.sizes.at(j)});
  }
  for (std::size_t e = 0; e < tp.graph.edges.size(); ++e) {
    auto [a, b] = tp.graph.edges[e];
    int c = static_cast<int>(g.mjt.nodes.size());
    g.mjt.nodes.push_back({make_varset({a, b}), false, std::nullopt});
    g.mjt.edges.push_back({index[a], c});
    g.mjt.edges.push_back({index[b], c});
    const Matrix& m = tp.costs[e];
    g.costs[c] = LabeledTensor::matrix(a, b, m.rows, m.cols, m.a);
  }
  for (const auto& [j, mu] : tp.marginals) g.marginals[index[j]] = LabeledTensor::vector(j, mu);
  g.epsilon = tp.epsilon;
  return g;
}

GraphLocalSolver::GraphLocalSolver(GraphLocalProblem problem) : p_(std::move(problem)) {
  auto v = validate_problem(p_);
  if (!v.empty()) throw ValidationError("invalid graph problem:\n" + format_violations(v));
  part_ = separator_partition(p_.mjt);
  for (int s : p_.mjt.separators()) {
    SepState st;
    st.order = inclusion_order(p_.mjt, s, p_.permissive);
    for (std::size_t i = 0; i < st.order.size(); ++i)
      sides_[st.order[i].neighbor].push_back({s, i});
    sep_[s] = std::move(st);
  }
  for (int c : p_.mjt.cost_cliques()) {
    auto ax = axes_for(p_.mjt.nodes[c].vars, p_.axes);
    LabeledTensor base = p_.costs.count(c) ? scaled(expand(p_.costs.at(c), ax), -1.0 / p_.epsilon)
                                           : LabeledTensor::filled(ax, 0.0);
    for (const auto& side : sides_[c]) {
      const auto& g = p_.mjt.nodes[side.sep].gamma;
      if (g) base = broadcast_add(base, log_of(p_.marginals.at(side.sep)));
    }
    log_base_[c] = std::move(base);
  }
  reset();
}

void GraphLocalSolver::reset() {
  for (auto& [s, st] : sep_) {
    st.log_u.clear();
    for (const auto& e : st.order)
      st.log_u.push_back(LabeledTensor::filled(axes_for(e.intersection, p_.axes), 0.0));
    const auto& g = p_.mjt.nodes[s].gamma;
    st.log_v = g ? LabeledTensor::filled(axes_for(*g, p_.axes), 0.0) : LabeledTensor::scalar(0.0);
  }
}

const LabeledTensor& GraphLocalSolver::log_u(int sep, std::size_t pos) const {
  return sep_.at(sep).log_u.at(pos);
}

void GraphLocalSolver::set_log_u(int sep, std::size_t pos, LabeledTensor v) {
  auto& cur = sep_.at(sep).log_u.at(pos);
  cur = expand(v, cur.axes());
}

const LabeledTensor& GraphLocalSolver::log_v(int sep) const { return sep_.at(sep).log_v; }

void GraphLocalSolver::set_log_v(int sep, LabeledTensor v) {
  auto& cur = sep_.at(sep).log_v;
  cur = expand(v, cur.axes());
}

LabeledTensor GraphLocalSolver::log_clique_plan(int c) const {
  LabeledTensor acc = log_base_.at(c);
  for (const auto& side : sides_.at(c))
    acc = broadcast_add(acc, sep_.at(side.sep).log_u[side.pos]);
  return acc;
}

LabeledTensor GraphLocalSolver::clique_plan(int c) const { return exp_of(log_clique_plan(c)); }

LabeledTensor GraphLocalSolver::log_k(int sep, std::size_t pos) const {
  const auto& entry = sep_.at(sep).order.at(pos);
  int c = entry.neighbor;
  LabeledTensor acc = log_base_.at(c);
  for (const auto& side : sides_.at(c))
    if (side.sep != sep) acc = broadcast_add(acc, sep_.at(side.sep).log_u[side.pos]);
  return log_project(acc, entry.intersection);
}

LabeledTensor GraphLocalSolver::k_message(int sep, std::size_t pos) const {
  return exp_of(log_k(sep, pos));
}

void GraphLocalSolver::separator_update(int sep) {
  SepState& st = sep_.at(sep);
  std::size_t l = st.order.size();
  if (l == 0) return;
  std::vector<LabeledTensor> lk(l), lq(l), la(l);
  for (std::size_t i = 0; i < l; ++i) {
    lk[i] = log_k(sep, i);
    require_finite(lk[i], sep);
  }
  lq[0] = lk[0];
  for (std::size_t i = 1; i < l; ++i) {
    double n = static_cast<double>(i + 1);
    LabeledTensor prev = log_project(lq[i - 1], st.order[i].intersection);
    lq[i] = scaled(broadcast_add(lk[i], scaled(prev, static_cast<double>(i))), 1.0 / n);
  }
  const auto& g = p_.mjt.nodes[sep].gamma;
  LabeledTensor lr;
  if (g) {
    lr = minus(log_of(p_.marginals.at(sep)), log_project(lq[l - 1], *g));
  } else {
    lr = LabeledTensor::scalar(-log_sum_exp(lq[l - 1].values()));
  }
  require_finite(lr, sep);
  la[l - 1] = broadcast_add(lq[l - 1], lr);
  for (std::size_t i = l - 1; i-- > 0;) {
    LabeledTensor down = log_project(lq[i], st.order[i + 1].intersection);
    la[i] = broadcast_add(lq[i], minus(la[i + 1], down));
  }
  for (std::size_t i = 0; i < l; ++i) st.log_u[i] = expand(minus(la[i], lk[i]), st.log_u[i].axes());
  st.log_v = expand(scaled(lr, static_cast<double>(l)), st.log_v.axes());
}

void GraphLocalSolver::update_partition(int side) {
  const auto& seps = side == 1 ? part_.s1 : part_.s2;
  parallel_for(seps.size(), threads_, [&](std::size_t i) { separator_update(seps[i]); });
}

GraphResidual GraphLocalSolver::residual() const {
  GraphResidual r;
  std::map<int, LabeledTensor> plan;
  for (int c : p_.mjt.cost_cliques()) plan[c] = clique_plan(c);
  for (const auto& [s, st] : sep_) {
    std::size_t l = st.order.size();
    std::vector<LabeledTensor> marg(l);
    for (std::size_t i = 0; i < l; ++i)
      marg[i] = project(plan.at(st.order[i].neighbor), st.order[i].intersection);
    const auto& g = p_.mjt.nodes[s].gamma;
    if (g)
      for (std::size_t i = 0; i < l; ++i)
        r.constrained += l1_distance(project(marg[i], *g), p_.marginals.at(s));
    if (l < 2) continue;
    for (std::size_t i = 0; i < l; ++i) {
      const VarSet& ii = st.order[i].intersection;
      LabeledTensor avg = LabeledTensor::filled(marg[i].axes(), 0.0);
      double count = 0.0;
      for (std::size_t j = 0; j < l; ++j) {
        if (!is_subset(ii, st.order[j].intersection)) continue;
        LabeledTensor pj = project(marg[j], ii);
        avg = broadcast_add(avg, pj);
        count += 1.0;
      }
      r.consistency += l1_distance(marg[i], scaled(avg, 1.0 / count));
    }
  }
  return r;
}

double GraphLocalSolver::dual() const {
  double f = 0.0;
  for (int c : p_.mjt.cost_cliques()) f += std::exp(log_sum_exp(log_clique_plan(c).values()));
  for (const auto& [s, st] : sep_) {
    if (p_.mjt.nodes[s].gamma)
      f -= inner(st.log_v, p_.marginals.at(s));
    else
      f -= st.log_v[0];
  }
  return f;
}

double GraphLocalSolver::max_mass_deviation() const {
  double m = 0.0;
  for (int c : p_.mjt.cost_cliques())
    m = std::max(m, std::abs(std::exp(log_sum_exp(log_clique_plan(c).values())) - 1.0));
  return m;
}

std::vector<LabeledTensor> GraphLocalSolver::plans() const {
  std::vector<LabeledTensor> out;
  for (int c : p_.mjt.cost_cliques()) out.push_back(clique_plan(c));
  return out;
}

double GraphLocalSolver::cost() const {
  double s = 0.0;
  for (const auto& [c, t] : p_.costs) s += inner(clique_plan(c), t);
  return s;
}

SolveReport GraphLocalSolver::solve(const GraphLocalOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  set_threads(opt.threads);
  reset();
  SolveReport rep;
  rep.solver = "graph-local";
  rep.epsilon = p_.epsilon;
  rep.delta_prime = opt.delta_prime;
  rep.c_inf = c_inf(p_);
  rep.iteration_bound =
      iteration_bound(p_.mjt.cost_cliques().size(), rep.c_inf, opt.delta_prime, p_.epsilon);
  rep.threads = threads_;
  rep.log_domain = true;
  long t = 0;
  while (true) {
    double e = residual().total();
    rep.residual_trace.push_back(e);
    rep.elapsed_trace.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (opt.instrument) {
      rep.dual_trace.push_back(dual());
      rep.mass_deviation_trace.push_back(max_mass_deviation());
    }
    rep.final_residual = e;
    if (t >= 1 && e < opt.delta_prime) {
      rep.converged = true;
      break;
    }
    if (t >= opt.max_iter) break;
    ++t;
    int side = (t % 2 == 1) ? 1 : 2;
    update_partition(side);
    rep.last_partition = side;
  }
  rep.iterations = t;
  rep.cost = cost();
  rep.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace graphot
