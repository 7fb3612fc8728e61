#include "graphot/mot_global.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "graphot/random.hpp"

namespace graphot {

namespace {

constexpr double kClampFloor = 1e-300;
constexpr double kAutoLogThreshold = 500.0;

void check_marginal(const LabeledTensor& mu, bool clamp, const std::string& who,
                    std::vector<Violation>& out) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double v = mu[i];
    if (!std::isfinite(v) || v < 0.0 || (v == 0.0 && !clamp)) {
      out.push_back({"marginal", who + " has entry " + std::to_string(i) + " = " +
                                     std::to_string(v) +
                                     (v == 0.0 ? "; zero entries need clamp mode"
                                               : "; entries must be positive")});
      return;
    }
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9)
    out.push_back({"marginal", who + " sums to " + std::to_string(s) + " instead of 1"});
}

bool has_label(const std::vector<Axis>& axes, Label l) {
  for (const auto& a : axes)
    if (a.label == l) return true;
  return false;
}

LabeledTensor clamp_log(const LabeledTensor& mu) {
  return map(mu, [](double v) { return std::log(std::max(v, kClampFloor)); });
}

LabeledTensor scaled(const LabeledTensor& t, double f) {
  return map(t, [f](double v) { return v * f; });
}

LabeledTensor add(const LabeledTensor& a, const LabeledTensor& b) {
  return broadcast_add(a, b);
}

LabeledTensor sub(const LabeledTensor& a, const LabeledTensor& b) {
  return broadcast_add(a, scaled(b, -1.0));
}

double mass_from_log(const LabeledTensor& log_t) { return std::exp(log_sum_exp(log_t.values())); }

}  // namespace

std::vector<Axis> axes_for(const VarSet& vars, const std::vector<Axis>& axes) {
  std::vector<Axis> out;
  for (Label l : vars) {
    bool found = false;
    for (const auto& a : axes)
      if (a.label == l) {
        out.push_back(a);
        found = true;
      }
    if (!found) throw LabelError("variable " + std::to_string(l) + " has no declared axis");
  }
  return out;
}

std::vector<Violation> validate_problem(const MotProblem& p) {
  std::vector<Violation> out;
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
    out.push_back({"epsilon", "regularization must be positive and finite"});
  for (std::size_t i = 0; i < p.axes.size(); ++i) {
    if (p.axes[i].size == 0)
      out.push_back({"axis", "axis " + std::to_string(p.axes[i].label) + " has size 0"});
    for (std::size_t j = i + 1; j < p.axes.size(); ++j)
      if (p.axes[i].label == p.axes[j].label)
        out.push_back({"axis", "label " + std::to_string(p.axes[i].label) + " declared twice"});
  }
  if (p.cost.rank() != p.axes.size())
    out.push_back({"cost", "cost tensor must span every axis"});
  for (const auto& a : p.cost.axes())
    if (!has_label(p.axes, a.label))
      out.push_back({"cost", "cost axis " + std::to_string(a.label) + " is not declared"});
  for (double v : p.cost.values())
    if (!std::isfinite(v)) {
      out.push_back({"cost", "cost tensor has a non-finite entry"});
      break;
    }
  for (std::size_t c = 0; c < p.constraints.size(); ++c) {
    const auto& k = p.constraints[c];
    std::string who = "constraint " + std::to_string(c) + " on " + to_string(k.labels);
    bool ok = !k.labels.empty() && k.labels == make_varset(k.labels) &&
              k.mu.rank() == k.labels.size();
    for (Label l : k.labels) ok = ok && has_label(p.axes, l) && k.mu.has_label(l);
    if (!ok) {
      out.push_back({"constraint", who + " does not match its marginal or the axes"});
      continue;
    }
    for (Label l : k.labels) {
      for (const auto& a : p.axes)
        if (a.label == l && a.size != k.mu.extent(l))
          out.push_back({"constraint", who + " has the wrong size on variable " + std::to_string(l)});
    }
    check_marginal(k.mu, p.clamp_zero, who, out);
  }
  return out;
}

std::vector<Violation> validate_problem(const JtProblem& p) {
  std::vector<VarSet> factors;
  for (std::size_t c = 0; c < p.costs.size(); ++c)
    if (p.costs[c] && c < p.tree.cliques.size()) factors.push_back(p.tree.cliques[c]);
  auto out = validate_jt(p.tree, factors);
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon))
    out.push_back({"epsilon", "regularization must be positive and finite"});
  if (p.costs.size() != p.tree.cliques.size())
    out.push_back({"cost", "expected one optional cost per clique"});
  for (std::size_t c = 0; c < p.tree.cliques.size(); ++c) {
    for (Label l : p.tree.cliques[c])
      if (!has_label(p.axes, l))
        out.push_back({"axis", "clique " + std::to_string(c) + " uses undeclared variable " +
                                   std::to_string(l)});
    if (c < p.costs.size() && p.costs[c]) {
      const auto& t = *p.costs[c];
      bool ok = t.rank() == p.tree.cliques[c].size();
      for (Label l : p.tree.cliques[c]) ok = ok && t.has_label(l);
      if (!ok)
        out.push_back({"cost", "cost of clique " + std::to_string(c) + " must span exactly " +
                                   to_string(p.tree.cliques[c])});
    }
  }
  for (int c : p.tree.constrained) {
    if (c < 0 || c >= static_cast<int>(p.tree.cliques.size())) continue;
    auto it = p.marginals.find(c);
    if (it == p.marginals.end()) {
      out.push_back({"marginal", "constrained clique " + std::to_string(c) + " has no marginal"});
      continue;
    }
    bool ok = it->second.rank() == p.tree.cliques[c].size();
    for (Label l : p.tree.cliques[c]) ok = ok && it->second.has_label(l);
    if (!ok) {
      out.push_back({"marginal", "marginal of clique " + std::to_string(c) +
                                     " must span exactly " + to_string(p.tree.cliques[c])});
      continue;
    }
    check_marginal(it->second, p.clamp_zero, "marginal of clique " + std::to_string(c), out);
  }
  for (const auto& [c, mu] : p.marginals)
    if (!p.tree.is_constrained(c))
      out.push_back({"marginal", "clique " + std::to_string(c) + " has a marginal but is not constrained"});
  return out;
}

double c_inf(const MotProblem& p) {
  double m = 0.0;
  for (double v : p.cost.values()) m = std::max(m, std::abs(v));
  return m;
}

double cost_sum_bound(const JtProblem& p) {
  double s = 0.0;
  for (const auto& c : p.costs) {
    if (!c) continue;
    double m = 0.0;
    for (double v : c->values()) m = std::max(m, std::abs(v));
    s += m;
  }
  return s;
}

MotProblem densify(const JtProblem& p, std::size_t cap) {
  MotProblem d;
  VarSet all;
  for (const auto& a : p.axes) all.push_back(a.label);
  all = make_varset(all);
  d.axes = axes_for(all, p.axes);
  volume(d.axes, cap);
  d.cost = LabeledTensor::filled(d.axes, 0.0);
  for (const auto& c : p.costs)
    if (c) d.cost = broadcast_add(d.cost, *c);
  for (int c : p.tree.constrained)
    d.constraints.push_back({p.tree.cliques[c], p.marginals.at(c)});
  d.epsilon = p.epsilon;
  d.clamp_zero = p.clamp_zero;
  return d;
}

double dense_residual(const MotProblem& p, const LabeledTensor& plan) {
  double r = 0.0;
  for (const auto& k : p.constraints) r += l1_distance(project(plan, k.labels), k.mu);
  return r;
}

DenseResult sinkhorn_full(const MotProblem& p, const SinkhornOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  auto v = validate_problem(p);
  if (!v.empty()) throw ValidationError("invalid multi-marginal problem:\n" + format_violations(v));
  volume(p.axes, opt.cap);
  const double eps = p.epsilon;
  std::vector<LabeledTensor> mu, log_mu, log_u;
  bool has_zero = false;
  for (const auto& k : p.constraints) {
    auto ax = axes_for(k.labels, p.axes);
    mu.push_back(expand(k.mu, ax));
    for (double x : mu.back().values()) has_zero = has_zero || x == 0.0;
    log_mu.push_back(clamp_log(mu.back()));
    log_u.push_back(LabeledTensor::filled(ax, 0.0));
  }
  LabeledTensor log_k = scaled(expand(p.cost, p.axes), -1.0 / eps);
  bool use_log = opt.domain == Domain::log ||
                 (opt.domain == Domain::automatic &&
                  (has_zero || c_inf(p) / eps > kAutoLogThreshold));
  LabeledTensor k_lin = use_log ? LabeledTensor() : exp_of(log_k);

  auto build = [&]() {
    if (use_log) {
      LabeledTensor b = log_k;
      for (std::size_t c = 0; c < mu.size(); ++c) b = broadcast_add(b, add(log_u[c], log_mu[c]));
      return b;
    }
    LabeledTensor b = k_lin;
    for (std::size_t c = 0; c < mu.size(); ++c)
      b = broadcast_mul(b, exp_of(add(log_u[c], log_mu[c])));
    return b;
  };
  auto linear_plan = [&](const LabeledTensor& b) { return use_log ? exp_of(b) : b; };
  auto dual_of = [&](const LabeledTensor& b) {
    double mass = use_log ? mass_from_log(b) : total_mass(b);
    double s = -eps * mass;
    for (std::size_t c = 0; c < mu.size(); ++c) s += eps * inner(log_u[c], mu[c]);
    return s;
  };

  DenseResult res;
  SolveReport& rep = res.report;
  rep.solver = "dense";
  rep.epsilon = eps;
  rep.delta_prime = opt.tol;
  rep.c_inf = c_inf(p);
  rep.log_domain = use_log;
  long t = 0;
  LabeledTensor b = build();
  while (true) {
    LabeledTensor lin = linear_plan(b);
    double e = dense_residual(p, lin);
    rep.residual_trace.push_back(e);
    rep.elapsed_trace.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    rep.dual_trace.push_back(dual_of(b));
    rep.final_residual = e;
    if (t >= 1 && e <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (t >= opt.max_iter) break;
    ++t;
    for (std::size_t c = 0; c < mu.size(); ++c) {
      const auto& labels = p.constraints[c].labels;
      LabeledTensor log_p;
      if (use_log) {
        log_p = log_project(b, labels);
      } else {
        LabeledTensor proj = project(b, labels);
        for (std::size_t i = 0; i < proj.size(); ++i)
          if (!(proj[i] > 0.0))
            throw NumericError("projection on " + to_string(labels) + " vanished at entry " +
                               std::to_string(i) +
                               "; increase epsilon or use the log domain");
        log_p = log_of(proj);
      }
      LabeledTensor step = sub(log_mu[c], log_p);
      log_u[c] = add(log_u[c], step);
      b = use_log ? broadcast_add(b, step) : broadcast_mul(b, exp_of(step));
    }
    b = build();
  }
  rep.iterations = t;
  res.plan = linear_plan(b);
  res.log_u = log_u;
  rep.cost = inner(expand(p.cost, p.axes), res.plan);
  rep.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

IsbpSolver::IsbpSolver(JtProblem problem) : p_(std::move(problem)) {
  auto v = validate_problem(p_);
  if (!v.empty()) throw ValidationError("invalid junction-tree problem:\n" + format_violations(v));
  const auto& jt = p_.tree;
  int n = static_cast<int>(jt.cliques.size());
  into_.assign(n, {});
  for (auto [a, b] : jt.edges) {
    dirs_.push_back({a, b});
    dirs_.push_back({b, a});
  }
  for (std::size_t d = 0; d < dirs_.size(); ++d) {
    auto [from, to] = dirs_[d];
    into_[to].push_back(d);
    std::vector<char> side(n, 0);
    std::deque<int> q{from};
    side[from] = 1;
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      for (int y : jt.neighbors(x))
        if (!side[y] && !(x == from && y == to)) side[y] = 1, q.push_back(y);
    }
    source_side_.push_back(std::move(side));
  }
  for (int c = 0; c < n; ++c) {
    auto ax = axes_for(jt.cliques[c], p_.axes);
    if (p_.costs[c])
      base_.push_back(scaled(expand(*p_.costs[c], ax), -1.0 / p_.epsilon));
    else
      base_.push_back(LabeledTensor::filled(ax, 0.0));
    if (jt.is_constrained(c))
      log_mu_.push_back(clamp_log(expand(p_.marginals.at(c), ax)));
    else
      log_mu_.push_back(LabeledTensor::filled(ax, 0.0));
  }
  reset();
}

void IsbpSolver::reset() {
  psi_.clear();
  for (std::size_t c = 0; c < base_.size(); ++c) psi_.push_back(add(base_[c], log_mu_[c]));
  cache_.assign(dirs_.size(), std::nullopt);
  totals_.assign(psi_.size(), std::nullopt);
}

void IsbpSolver::set_log_u(int c, const LabeledTensor& log_u) {
  if (!p_.tree.is_constrained(c))
    throw ArgumentError("clique " + std::to_string(c) + " is not constrained");
  psi_[c] = add(add(base_[c], log_mu_[c]), expand(log_u, base_[c].axes()));
  invalidate_from(c);
}

LabeledTensor IsbpSolver::log_u(int c) const { return sub(sub(psi_[c], base_[c]), log_mu_[c]); }

void IsbpSolver::invalidate_from(int c) {
  for (std::size_t d = 0; d < dirs_.size(); ++d)
    if (source_side_[d][c]) cache_[d].reset();
  for (auto& t : totals_) t.reset();
}

const IsbpSolver::Message& IsbpSolver::total(int c) const {
  if (totals_[c]) return *totals_[c];
  Message acc{psi_[c], 0.0};
  for (std::size_t in : into_[c]) {
    const Message& m = message(in);
    acc.log_m = broadcast_add(acc.log_m, m.log_m);
    acc.log_scale += m.log_scale;
  }
  totals_[c] = std::move(acc);
  return *totals_[c];
}

const IsbpSolver::Message& IsbpSolver::message(std::size_t dir) const {
  if (cache_[dir]) return *cache_[dir];
  auto [from, to] = dirs_[dir];
  LabeledTensor acc;
  double scale = 0.0;
  if (into_[from].size() > 2 && cache_[dir ^ 1]) {
    // Hubs: divide the known reverse message out of the full product.
    const Message& back = message(dir ^ 1);
    const Message& all = total(from);
    acc = broadcast_add(all.log_m, map(back.log_m, [](double v) { return -v; }));
    scale = all.log_scale - back.log_scale;
  } else {
    acc = psi_[from];
    for (std::size_t in : into_[from]) {
      if (dirs_[in].first == to) continue;
      const Message& m = message(in);
      acc = broadcast_add(acc, m.log_m);
      scale += m.log_scale;
    }
  }
  VarSet sep = p_.tree.separator(from, to);
  Message out;
  out.log_m = log_project(acc, sep);
  double z = log_sum_exp(out.log_m.values());
  for (double& x : out.log_m.values()) x -= z;
  out.log_scale = scale + z;
  cache_[dir] = std::move(out);
  return *cache_[dir];
}

LabeledTensor IsbpSolver::log_belief(int c) const {
  const Message& all = total(c);
  LabeledTensor acc = all.log_m;
  for (double& x : acc.values()) x += all.log_scale;
  return acc;
}

LabeledTensor IsbpSolver::projection_via_messages(int c) const { return exp_of(log_belief(c)); }

void IsbpSolver::update_leaf(int c) {
  if (!p_.tree.is_constrained(c))
    throw ArgumentError("clique " + std::to_string(c) + " is not constrained");
  LabeledTensor lb = log_belief(c);
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (lb[i] == -std::numeric_limits<double>::infinity())
      throw NumericError("projection on clique " + std::to_string(c) + " vanished at entry " +
                         std::to_string(i) + "; increase epsilon");
  psi_[c] = add(psi_[c], sub(log_mu_[c], lb));
  invalidate_from(c);
}

double IsbpSolver::residual() const {
  double r = 0.0;
  for (int c : p_.tree.constrained)
    r += l1_distance(projection_via_messages(c), p_.marginals.at(c));
  return r;
}

double IsbpSolver::dual() const {
  double mass = std::exp(log_sum_exp(log_belief(0).values()));
  double s = -p_.epsilon * mass;
  for (int c : p_.tree.constrained)
    s += p_.epsilon * inner(log_u(c), p_.marginals.at(c));
  return s;
}

std::vector<LabeledTensor> IsbpSolver::plans() const {
  std::vector<LabeledTensor> out;
  for (std::size_t c = 0; c < psi_.size(); ++c) out.push_back(projection_via_messages(static_cast<int>(c)));
  return out;
}

double IsbpSolver::cost() const {
  double s = 0.0;
  for (std::size_t c = 0; c < psi_.size(); ++c)
    if (p_.costs[c]) s += inner(projection_via_messages(static_cast<int>(c)), *p_.costs[c]);
  return s;
}

SolveReport IsbpSolver::solve(const IsbpOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  reset();
  SolveReport rep;
  rep.solver = "global-isbp";
  rep.epsilon = p_.epsilon;
  rep.delta_prime = opt.tol;
  rep.log_domain = true;
  const auto& leaves = p_.tree.constrained;
  SplitMix64 rng(opt.seed);
  long t = 0;
  std::size_t next = 0;
  while (true) {
    double e = residual();
    rep.residual_trace.push_back(e);
    rep.elapsed_trace.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    rep.dual_trace.push_back(dual());
    rep.final_residual = e;
    if ((t >= 1 || leaves.empty()) && e <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (t >= opt.max_iter || leaves.empty()) break;
    ++t;
    int c;
    if (opt.schedule == Schedule::random) {
      c = leaves[rng.below(leaves.size())];
    } else {
      std::vector<int> sorted = leaves;
      std::sort(sorted.begin(), sorted.end());
      c = sorted[next++ % sorted.size()];
    }
    update_leaf(c);
  }
  rep.iterations = t;
  rep.cost = cost();
  rep.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace graphot
