#include "graphot/spec_file.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "graphot/rounding.hpp"

namespace graphot {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ArgumentError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ArgumentError("unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ArgumentError(where + "." + key + " has the wrong type");
  }
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ArgumentError(where + "." + key + " is required");
  return get_or<T>(j, key, where, T{});
}

std::set<std::string> problem_keys(const std::string& family, const std::string& kind) {
  if (family == "barycenter") return {"family", "n_leaves"};
  if (family == "euler") return {"family", "J", "sigma", "variant"};
  if (family == "wls") return {"family", "J", "times", "alpha"};
  if (family == "spline") return {"family", "J", "times"};
  if (family == "custom") {
    if (kind == "tree") return {"family", "kind", "nodes", "edges"};
    if (kind == "junction-tree") return {"family", "kind", "variables", "cliques", "edges", "clamp_zero"};
    if (kind == "modified-junction-tree")
      return {"family", "kind", "variables", "nodes", "edges", "permissive"};
    throw ArgumentError("problem.kind must be tree, junction-tree or modified-junction-tree");
  }
  throw ArgumentError("unknown problem family '" + family + "'");
}

const std::set<std::string> kMethods{"tree-local", "global-isbp", "graph-local", "dense"};

void check_method(const std::string& m, const std::string& where) {
  if (!kMethods.count(m))
    throw ArgumentError(where + " must be one of tree-local, global-isbp, graph-local, dense");
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open output file '" + path + "'");
  f << text;
  if (!f) throw IoError("failed writing output file '" + path + "'");
}

std::vector<Axis> parse_variables(const json& prob) {
  std::vector<Axis> axes;
  for (const auto& v : require<json>(prob, "variables", "problem")) {
    check_keys(v, "problem.variables[]", {"label", "size"});
    int size = require<int>(v, "size", "problem.variables[]");
    if (size < 1) throw ArgumentError("variable sizes must be positive");
    axes.push_back(Axis{require<int>(v, "label", "problem.variables[]"), static_cast<std::size_t>(size)});
  }
  std::sort(axes.begin(), axes.end(), [](const Axis& a, const Axis& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < axes.size(); ++i)
    if (axes[i].label == axes[i - 1].label)
      throw ArgumentError("variable label " + std::to_string(axes[i].label) + " declared twice");
  return axes;
}

LabeledTensor parse_tensor(const json& t, const std::vector<Axis>& vars, const std::string& where) {
  check_keys(t, where, {"axes", "values"});
  std::vector<Axis> axes;
  for (int l : require<std::vector<int>>(t, "axes", where)) {
    auto it = std::find_if(vars.begin(), vars.end(), [&](const Axis& a) { return a.label == l; });
    if (it == vars.end()) throw LabelError(where + " uses undeclared variable " + std::to_string(l));
    axes.push_back(*it);
  }
  return LabeledTensor(axes, require<std::vector<double>>(t, "values", where));
}

std::vector<std::pair<int, int>> parse_edges(const json& prob) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : require<json>(prob, "edges", "problem")) {
    auto v = e.get<std::vector<int>>();
    if (v.size() != 2) throw ArgumentError("problem.edges entries must be pairs");
    edges.push_back({v[0], v[1]});
  }
  return edges;
}

Instance build_custom(const json& prob) {
  Instance inst;
  inst.family = "custom";
  std::string kind = require<std::string>(prob, "kind", "problem");
  if (kind == "tree") {
    TreeProblem tp;
    for (const auto& n : require<json>(prob, "nodes", "problem")) {
      check_keys(n, "problem.nodes[]", {"id", "size", "mu"});
      NodeId id = require<int>(n, "id", "problem.nodes[]");
      int size = require<int>(n, "size", "problem.nodes[]");
      if (size < 1) throw ArgumentError("node " + std::to_string(id) + " needs a positive size");
      tp.graph.nodes.push_back(id);
      tp.sizes[id] = static_cast<std::size_t>(size);
      if (n.contains("mu")) {
        tp.graph.constrained.push_back(id);
        tp.marginals[id] = n.at("mu").get<std::vector<double>>();
      }
    }
    for (const auto& e : require<json>(prob, "edges", "problem")) {
      check_keys(e, "problem.edges[]", {"nodes", "cost"});
      auto ends = require<std::vector<int>>(e, "nodes", "problem.edges[]");
      if (ends.size() != 2) throw ArgumentError("problem.edges[].nodes must be a pair");
      auto cost = require<std::vector<double>>(e, "cost", "problem.edges[]");
      std::size_t r = tp.sizes.count(ends[0]) ? tp.sizes[ends[0]] : 0;
      std::size_t c = tp.sizes.count(ends[1]) ? tp.sizes[ends[1]] : 0;
      tp.graph.edges.push_back({ends[0], ends[1]});
      tp.costs.push_back(Matrix(r, c, std::move(cost)));
    }
    bool ok = validate_problem(tp).empty();
    if (ok) {
      inst.jt = jt_from_tree(tp);
      inst.graph = encode_tree(tp);
    }
    inst.tree = std::move(tp);
    return inst;
  }
  std::vector<Axis> vars = parse_variables(prob);
  if (kind == "junction-tree") {
    JtProblem jp;
    jp.axes = vars;
    jp.clamp_zero = get_or<bool>(prob, "clamp_zero", "problem", false);
    for (const auto& c : require<json>(prob, "cliques", "problem")) {
      check_keys(c, "problem.cliques[]", {"vars", "cost", "mu"});
      int id = static_cast<int>(jp.tree.cliques.size());
      jp.tree.cliques.push_back(make_varset(require<std::vector<int>>(c, "vars", "problem.cliques[]")));
      if (c.contains("cost"))
        jp.costs.push_back(parse_tensor(c.at("cost"), vars, "problem.cliques[].cost"));
      else
        jp.costs.push_back(std::nullopt);
      if (c.contains("mu")) {
        jp.tree.constrained.push_back(id);
        jp.marginals[id] = parse_tensor(c.at("mu"), vars, "problem.cliques[].mu");
      }
    }
    jp.tree.edges = parse_edges(prob);
    inst.jt = std::move(jp);
    return inst;
  }
  GraphLocalProblem g;
  g.axes = vars;
  g.permissive = get_or<bool>(prob, "permissive", "problem", false);
  for (const auto& n : require<json>(prob, "nodes", "problem")) {
    check_keys(n, "problem.nodes[]", {"vars", "separator", "gamma", "mu", "cost"});
    int id = static_cast<int>(g.mjt.nodes.size());
    MjtNode node;
    node.vars = make_varset(require<std::vector<int>>(n, "vars", "problem.nodes[]"));
    node.is_separator = get_or<bool>(n, "separator", "problem.nodes[]", false);
    if (n.contains("gamma")) node.gamma = make_varset(n.at("gamma").get<std::vector<int>>());
    if (n.contains("mu")) g.marginals[id] = parse_tensor(n.at("mu"), vars, "problem.nodes[].mu");
    if (n.contains("cost")) g.costs[id] = parse_tensor(n.at("cost"), vars, "problem.nodes[].cost");
    g.mjt.nodes.push_back(std::move(node));
  }
  g.mjt.edges = parse_edges(prob);
  inst.graph = std::move(g);
  return inst;
}

std::size_t family_size(const json& prob, const char* key, std::size_t fallback) {
  long v = get_or<long>(prob, key, "problem", static_cast<long>(fallback));
  if (v < 1) throw ArgumentError(std::string("problem.") + key + " must be positive");
  return static_cast<std::size_t>(v);
}

std::size_t max_axis(const std::vector<Axis>& axes) {
  std::size_t d = 1;
  for (const auto& a : axes) d = std::max(d, a.size);
  return d;
}

double log_size(std::size_t d) { return std::log(static_cast<double>(std::max<std::size_t>(d, 2))); }

const char* kSolveHeader =
    "format_version,record,solver,iteration,residual,dual,elapsed_seconds,converged,cost,"
    "rounded_cost,iteration_bound,epsilon,delta_prime,c_inf,threads\n";

}  // namespace

ProblemSpec parse_spec(const json& doc) {
  check_keys(doc, "spec", {"format_version", "problem", "grid", "marginals", "solver", "output", "sweep"});
  int version = require<int>(doc, "format_version", "spec");
  if (version != kFormatVersion)
    throw ArgumentError("unsupported format_version " + std::to_string(version) + " (expected " +
                        std::to_string(kFormatVersion) + ")");
  ProblemSpec s;
  s.problem = require<json>(doc, "problem", "spec");
  if (!s.problem.is_object()) throw ArgumentError("problem must be an object");
  std::string family = require<std::string>(s.problem, "family", "problem");
  check_keys(s.problem, "problem",
             problem_keys(family, get_or<std::string>(s.problem, "kind", "problem", "")));

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_keys(g, "grid", {"d", "lo", "hi", "d_v", "v_lo", "v_hi"});
    long d = get_or<long>(g, "d", "grid", 10);
    long dv = get_or<long>(g, "d_v", "grid", 1);
    if (d < 1 || dv < 1) throw ArgumentError("grid sizes must be at least 1");
    s.grid = GridSpec{static_cast<std::size_t>(d), get_or<double>(g, "lo", "grid", 0.0),
                      get_or<double>(g, "hi", "grid", 1.0)};
    s.grid_v = GridSpec{static_cast<std::size_t>(dv), get_or<double>(g, "v_lo", "grid", s.grid.lo),
                        get_or<double>(g, "v_hi", "grid", s.grid.hi)};
    if (!(s.grid.lo < s.grid.hi) || !(s.grid_v.lo < s.grid_v.hi))
      throw ArgumentError("grid intervals must satisfy lo < hi");
  }
  if (doc.contains("marginals")) {
    const json& m = doc.at("marginals");
    check_keys(m, "marginals", {"kind", "seed", "location", "scale", "values"});
    std::string kind = get_or<std::string>(m, "kind", "marginals", "lognormal");
    if (kind == "lognormal")
      s.marginals.kind = MarginalGen::Kind::lognormal;
    else if (kind == "explicit")
      s.marginals.kind = MarginalGen::Kind::explicit_values;
    else
      throw ArgumentError("marginals.kind must be lognormal or explicit");
    s.marginals.seed = get_or<std::uint64_t>(m, "seed", "marginals", 0);
    s.marginals.location = get_or<double>(m, "location", "marginals", 0.0);
    s.marginals.scale = get_or<double>(m, "scale", "marginals", 1.0);
    s.marginals.values = get_or<std::vector<std::vector<double>>>(m, "values", "marginals", {});
    if (!(s.marginals.scale > 0.0)) throw ArgumentError("marginals.scale must be positive");
  }
  if (doc.contains("solver")) {
    const json& v = doc.at("solver");
    check_keys(v, "solver", {"method", "delta", "epsilon", "delta_prime", "max_iter", "schedule",
                             "seed", "threads", "log_domain", "round"});
    SolverConfig& c = s.solver;
    c.method = get_or<std::string>(v, "method", "solver", c.method);
    check_method(c.method, "solver.method");
    c.delta = get_or<double>(v, "delta", "solver", c.delta);
    if (v.contains("epsilon")) c.epsilon = get_or<double>(v, "epsilon", "solver", 0.0);
    if (v.contains("delta_prime")) c.delta_prime = get_or<double>(v, "delta_prime", "solver", 0.0);
    c.max_iter = get_or<long>(v, "max_iter", "solver", c.max_iter);
    std::string sched = get_or<std::string>(v, "schedule", "solver", "round-robin");
    if (sched == "round-robin")
      c.schedule = Schedule::round_robin;
    else if (sched == "random")
      c.schedule = Schedule::random;
    else
      throw ArgumentError("solver.schedule must be round-robin or random");
    c.seed = get_or<std::uint64_t>(v, "seed", "solver", 0);
    c.threads = get_or<int>(v, "threads", "solver", 1);
    c.log_domain = get_or<bool>(v, "log_domain", "solver", false);
    c.round = get_or<bool>(v, "round", "solver", true);
    if (!(c.delta > 0.0)) throw ArgumentError("solver.delta must be positive");
    if (c.epsilon && !(*c.epsilon > 0.0)) throw ArgumentError("solver.epsilon must be positive");
    if (c.delta_prime && !(*c.delta_prime > 0.0))
      throw ArgumentError("solver.delta_prime must be positive");
    if (c.max_iter < 0) throw ArgumentError("solver.max_iter must be non-negative");
    if (c.threads < 1) throw ArgumentError("solver.threads must be at least 1");
  }
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_keys(o, "output", {"csv", "trace", "timing"});
    s.output.csv = get_or<std::string>(o, "csv", "output", "");
    s.output.trace = get_or<std::string>(o, "trace", "output", "full");
    s.output.timing = get_or<bool>(o, "timing", "output", false);
    if (s.output.trace != "full" && s.output.trace != "summary")
      throw ArgumentError("output.trace must be full or summary");
  }
  if (doc.contains("sweep")) {
    const json& w = doc.at("sweep");
    check_keys(w, "sweep", {"parameter", "values", "seeds", "methods"});
    SweepConfig sw;
    sw.parameter = get_or<std::string>(w, "parameter", "sweep", "d");
    if (sw.parameter != "d" && sw.parameter != "edges")
      throw ArgumentError("sweep.parameter must be d or edges");
    sw.values = require<std::vector<long>>(w, "values", "sweep");
    sw.seeds = get_or<std::vector<std::uint64_t>>(w, "seeds", "sweep", sw.seeds);
    sw.methods = get_or<std::vector<std::string>>(w, "methods", "sweep", sw.methods);
    if (sw.values.empty() || sw.seeds.empty() || sw.methods.empty())
      throw ArgumentError("sweep.values, sweep.seeds and sweep.methods must be non-empty");
    for (long v : sw.values)
      if (v < 1) throw ArgumentError("sweep.values must be positive");
    for (const auto& m : sw.methods) check_method(m, "sweep.methods entries");
    s.sweep = std::move(sw);
  }
  return s;
}

ProblemSpec parse_spec_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("spec is not valid JSON: ") + e.what());
  }
  return parse_spec(doc);
}

ProblemSpec parse_spec_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read spec file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_spec_text(ss.str());
}

void apply_overrides(ProblemSpec& spec, const Overrides& o) {
  if (o.threads) {
    if (*o.threads < 1) throw ArgumentError("--threads must be at least 1");
    spec.solver.threads = *o.threads;
  }
  if (o.seed) {
    spec.marginals.seed = *o.seed;
    spec.solver.seed = *o.seed;
    if (spec.sweep)
      for (std::size_t i = 0; i < spec.sweep->seeds.size(); ++i) spec.sweep->seeds[i] = *o.seed + i;
  }
  if (o.out) spec.output.csv = *o.out;
  if (o.log_domain) spec.solver.log_domain = true;
  if (o.max_iter) {
    if (*o.max_iter < 0) throw ArgumentError("--max-iter must be non-negative");
    spec.solver.max_iter = *o.max_iter;
  }
}

Instance build_instance(const ProblemSpec& spec) {
  const json& prob = spec.problem;
  std::string family = prob.at("family").get<std::string>();
  Instance inst;
  inst.family = family;
  if (family == "barycenter") {
    auto b = barycenter_problem(family_size(prob, "n_leaves", 3), spec.grid, spec.marginals, 1.0);
    inst.graph = encode_tree(b.tree);
    inst.tree = std::move(b.tree);
    inst.jt = std::move(b.jt);
  } else if (family == "euler") {
    std::size_t J = family_size(prob, "J", 4);
    std::vector<int> sigma(spec.grid.d);
    std::iota(sigma.begin(), sigma.end(), 1);
    sigma = get_or<std::vector<int>>(prob, "sigma", "problem", sigma);
    for (int& v : sigma) --v;
    std::string variant = get_or<std::string>(prob, "variant", "problem", "relaxed");
    if (variant != "hard" && variant != "relaxed")
      throw ArgumentError("problem.variant must be hard or relaxed");
    auto e = euler_problem(J, spec.grid, sigma,
                           variant == "hard" ? EulerVariant::hard : EulerVariant::relaxed, 1.0);
    inst.jt = std::move(e.jt);
    inst.graph = std::move(e.graph);
  } else if (family == "wls") {
    std::size_t J = family_size(prob, "J", 3);
    auto times = get_or<std::vector<double>>(prob, "times", "problem", uniform_times(J));
    auto w = wls_problem(J, times, spec.grid, spec.marginals,
                         get_or<double>(prob, "alpha", "problem", 10.0), 1.0);
    inst.graph = std::move(w.graph);
    inst.jt = std::move(w.jt);
  } else if (family == "spline") {
    std::size_t J = family_size(prob, "J", 2);
    auto times = get_or<std::vector<double>>(prob, "times", "problem", uniform_times(J + 1));
    if (times.size() != J + 1)
      throw ValidationError("spline problem with J = " + std::to_string(J) + " needs " +
                            std::to_string(J + 1) + " times");
    auto sp = spline_problem(times, spec.grid, spec.grid_v, spec.marginals, 1.0);
    inst.graph = std::move(sp.graph);
    inst.jt = std::move(sp.jt);
  } else {
    inst = build_custom(prob);
  }
  return inst;
}

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> out;
  auto add = [&](std::vector<Violation> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (inst.tree) add(validate_problem(*inst.tree));
  if (inst.jt) add(validate_problem(*inst.jt));
  if (inst.graph) add(validate_problem(*inst.graph));
  return out;
}

std::size_t instance_diameter(const Instance& inst) {
  if (inst.tree) return tree_diameter(inst.tree->graph);
  TreeGraph g;
  if (inst.graph) {
    for (std::size_t i = 0; i < inst.graph->mjt.nodes.size(); ++i) g.nodes.push_back(static_cast<NodeId>(i));
    g.edges = inst.graph->mjt.edges;
  } else if (inst.jt) {
    for (std::size_t i = 0; i < inst.jt->tree.cliques.size(); ++i) g.nodes.push_back(static_cast<NodeId>(i));
    g.edges = inst.jt->tree.edges;
  }
  return g.nodes.empty() ? 0 : tree_diameter(g);
}

RunResult run_solver(const Instance& inst, const SolverConfig& cfg) {
  auto need = [&](bool present, const char* what) {
    if (!present)
      throw ArgumentError("method " + cfg.method + " needs " + what + "; the " + inst.family +
                          " problem does not provide one");
  };
  auto fail_on = [](const std::vector<Violation>& v) {
    if (!v.empty()) throw ValidationError(format_violations(v));
  };
  RunResult out;
  if (cfg.method == "tree-local") {
    need(inst.tree.has_value(), "a tree problem");
    fail_on(validate_problem(*inst.tree));
    TreeProblem p = *inst.tree;
    out.edges = p.graph.edges.size();
    out.d = max_size(p);
    p.epsilon = cfg.epsilon.value_or(recipe_epsilon(cfg.delta, out.edges, out.d));
    double dp = cfg.delta_prime.value_or(recipe_delta_prime(cfg.delta, c_inf(p)));
    TreeSolver solver(p, cfg.log_domain ? Domain::log : Domain::automatic);
    TreeSolverOptions opt;
    opt.delta_prime = dp;
    opt.max_iter = cfg.max_iter;
    opt.threads = cfg.threads;
    opt.domain = cfg.log_domain ? Domain::log : Domain::automatic;
    out.report = solver.solve(opt);
    if (cfg.round && out.report.last_partition != 0) {
      const auto& part = solver.partition();
      const auto& side = out.report.last_partition == 1 ? part.s2 : part.s1;
      out.report.rounded_cost = round_tree(p, solver.plans(), side, cfg.threads).report.cost_after;
    }
  } else if (cfg.method == "graph-local") {
    need(inst.graph.has_value(), "a modified junction tree");
    fail_on(validate_problem(*inst.graph));
    GraphLocalProblem p = *inst.graph;
    out.edges = p.mjt.cost_cliques().size();
    out.d = max_axis(p.axes);
    p.epsilon = cfg.epsilon.value_or(recipe_epsilon(cfg.delta, out.edges, out.d));
    double dp = cfg.delta_prime.value_or(recipe_delta_prime(cfg.delta, c_inf(p)));
    GraphLocalSolver solver(p);
    GraphLocalOptions opt;
    opt.delta_prime = dp;
    opt.max_iter = cfg.max_iter;
    opt.threads = cfg.threads;
    out.report = solver.solve(opt);
  } else {
    need(inst.jt.has_value(), "a junction tree");
    fail_on(validate_problem(*inst.jt));
    JtProblem p = *inst.jt;
    out.edges = inst.tree ? inst.tree->graph.edges.size() : static_cast<std::size_t>(std::count_if(
                                p.costs.begin(), p.costs.end(), [](const auto& c) { return c.has_value(); }));
    out.d = max_axis(p.axes);
    double bound = cost_sum_bound(p);
    p.epsilon = cfg.epsilon.value_or(cfg.delta / (2.0 * static_cast<double>(p.axes.size()) * log_size(out.d)));
    double dp = cfg.delta_prime.value_or(cfg.delta / (8.0 * std::max(bound, 1e-300)));
    if (cfg.method == "global-isbp") {
      IsbpSolver solver(p);
      IsbpOptions opt;
      opt.tol = dp;
      opt.max_iter = cfg.max_iter;
      opt.schedule = cfg.schedule;
      opt.seed = cfg.seed;
      out.report = solver.solve(opt);
    } else {
      SinkhornOptions opt;
      opt.tol = dp;
      opt.max_iter = cfg.max_iter;
      opt.domain = cfg.log_domain ? Domain::log : Domain::automatic;
      out.report = sinkhorn_full(densify(p), opt).report;
    }
    if (std::isnan(out.report.c_inf)) out.report.c_inf = bound;
  }
  return out;
}

namespace {

template <class F>
int guarded(std::ostream& diag, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    diag << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    diag << "error (spec): " << e.what() << "\n";
  }
  return 1;
}

}  // namespace

int cmd_solve(const ProblemSpec& spec, std::ostream& diag) {
  return guarded(diag, [&] {
    Instance inst = build_instance(spec);
    RunResult r = run_solver(inst, spec.solver);
    const SolveReport& rep = r.report;
    std::ostringstream csv;
    csv << kSolveHeader;
    bool timing = spec.output.timing;
    if (spec.output.trace == "full") {
      for (std::size_t t = 0; t < rep.residual_trace.size(); ++t) {
        csv << kFormatVersion << ",trace," << rep.solver << "," << t << "," << num(rep.residual_trace[t]) << ","
            << (t < rep.dual_trace.size() ? num(rep.dual_trace[t]) : "") << ","
            << (timing && t < rep.elapsed_trace.size() ? num(rep.elapsed_trace[t]) : "")
            << ",,,,,,,,\n";
      }
    }
    csv << kFormatVersion << ",summary," << rep.solver << "," << rep.iterations << ","
        << num(rep.final_residual) << "," << (rep.dual_trace.empty() ? "" : num(rep.dual_trace.back()))
        << "," << (timing ? num(rep.elapsed_seconds) : "") << "," << (rep.converged ? 1 : 0) << ","
        << num(rep.cost) << "," << num(rep.rounded_cost) << "," << num(rep.iteration_bound) << ","
        << num(rep.epsilon) << "," << num(rep.delta_prime) << "," << num(rep.c_inf) << ","
        << spec.solver.threads << "\n";
    write_output(spec.output.csv, csv.str());
    if (!rep.converged) {
      diag << rep.solver << ": stopped after " << rep.iterations << " iterations with residual "
           << num(rep.final_residual) << " (threshold " << num(rep.delta_prime) << ")\n";
      return 2;
    }
    return 0;
  });
}

int cmd_bench(const ProblemSpec& spec, std::ostream& diag) {
  return guarded(diag, [&] {
    if (!spec.sweep) throw ArgumentError("bench needs a sweep section");
    const SweepConfig& sw = *spec.sweep;
    std::string family = spec.problem.at("family").get<std::string>();
    const char* count_key = family == "barycenter" ? "n_leaves" : "J";
    if (sw.parameter == "edges" && family == "custom")
      throw ArgumentError("an edges sweep needs a problem family with a size parameter");
    std::ostringstream csv;
    csv << "format_version,solver,parameter,value,edges,d,seeds,mean_iterations,iterations,"
           "converged,max_iteration_bound,bound_respected,tree_local_scaling,global_scaling,"
           "diameter,threads,elapsed_seconds\n";
    bool all_converged = true;
    for (long value : sw.values) {
      for (const auto& method : sw.methods) {
        std::vector<long> iters;
        std::size_t edges = 0, d = 0, diameter = 0, constrained = 0;
        double cinf = 0.0, max_bound = NAN, elapsed = 0.0;
        bool converged = true, respected = true;
        for (std::uint64_t seed : sw.seeds) {
          ProblemSpec s = spec;
          s.marginals.seed = seed;
          s.solver.seed = seed;
          s.solver.method = method;
          if (sw.parameter == "d")
            s.grid.d = static_cast<std::size_t>(value);
          else
            s.problem[count_key] = value;
          Instance inst = build_instance(s);
          RunResult r = run_solver(inst, s.solver);
          iters.push_back(r.report.iterations);
          edges = r.edges;
          d = r.d;
          diameter = instance_diameter(inst);
          if (inst.tree) {
            cinf = c_inf(*inst.tree);
            constrained = inst.tree->graph.constrained.size();
          } else if (inst.graph) {
            cinf = c_inf(*inst.graph);
            constrained = inst.graph->marginals.size();
          } else {
            cinf = r.report.c_inf;
            constrained = inst.jt->marginals.size();
          }
          converged = converged && r.report.converged;
          if (!std::isnan(r.report.iteration_bound)) {
            max_bound = std::isnan(max_bound) ? r.report.iteration_bound
                                              : std::max(max_bound, r.report.iteration_bound);
            if (r.report.converged && static_cast<double>(r.report.iterations) > r.report.iteration_bound)
              respected = false;
          }
          elapsed += r.report.elapsed_seconds;
        }
        all_converged = all_converged && converged;
        double mean = 0.0;
        std::string list;
        for (std::size_t i = 0; i < iters.size(); ++i) {
          mean += static_cast<double>(iters[i]);
          list += (i ? ";" : "") + std::to_string(iters[i]);
        }
        mean /= static_cast<double>(iters.size());
        double e = static_cast<double>(edges), g = static_cast<double>(constrained);
        double common = cinf * cinf * log_size(d) / (spec.solver.delta * spec.solver.delta);
        csv << kFormatVersion << "," << method << "," << sw.parameter << "," << value << "," << edges << ","
            << d << "," << sw.seeds.size() << "," << num(mean) << "," << list << ","
            << (converged ? 1 : 0) << "," << num(max_bound) << ","
            << (std::isnan(max_bound) ? "" : (respected ? "1" : "0")) << "," << num(e * e * common)
            << "," << num(e * g * g * common) << "," << diameter << "," << spec.solver.threads << ","
            << (spec.output.timing ? num(elapsed / static_cast<double>(iters.size())) : "") << "\n";
      }
    }
    write_output(spec.output.csv, csv.str());
    if (!all_converged) {
      diag << "bench: at least one solve reached the iteration limit\n";
      return 2;
    }
    return 0;
  });
}

int cmd_validate(const ProblemSpec& spec, std::ostream& diag) {
  return guarded(diag, [&] {
    Instance inst = build_instance(spec);
    auto v = validate_instance(inst);
    if (!v.empty()) {
      diag << format_violations(v) << "\n";
      return 1;
    }
    diag << inst.family << " problem is valid\n";
    return 0;
  });
}

}  // namespace graphot
