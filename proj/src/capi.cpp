#include "graphot/graphot.h"

#include <cmath>
#include <iostream>
#include <new>
#include <string>

#include "graphot/rounding.hpp"
#include "graphot/spec_file.hpp"

struct graphot_spec {
  graphot::ProblemSpec spec;
};

struct graphot_tree {
  graphot::TreeProblem problem;
};

struct graphot_result {
  graphot::SolveReport report;
  std::vector<graphot::Matrix> plans;
};

namespace {

thread_local std::string last_error;

graphot_status status_of(graphot::ErrorKind k) {
  using graphot::ErrorKind;
  switch (k) {
    case ErrorKind::label: return GRAPHOT_E_LABEL;
    case ErrorKind::shape: return GRAPHOT_E_SHAPE;
    case ErrorKind::numeric: return GRAPHOT_E_NUMERIC;
    case ErrorKind::contract: return GRAPHOT_E_CONTRACT;
    case ErrorKind::validation: return GRAPHOT_E_VALIDATION;
    case ErrorKind::assumption: return GRAPHOT_E_ASSUMPTION;
    case ErrorKind::capacity: return GRAPHOT_E_CAPACITY;
    case ErrorKind::io: return GRAPHOT_E_IO;
    case ErrorKind::argument: return GRAPHOT_E_ARGUMENT;
  }
  return GRAPHOT_E_INTERNAL;
}

template <class F>
graphot_status guard(F&& f) {
  last_error.clear();
  try {
    f();
    return GRAPHOT_OK;
  } catch (const graphot::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  }
  return GRAPHOT_E_INTERNAL;
}

graphot_status null_arg(const char* what) {
  last_error = std::string(what) + " must not be null";
  return GRAPHOT_E_ARGUMENT;
}

}  // namespace

extern "C" {

const char* graphot_version(void) { return "1.0.0"; }

const char* graphot_last_error(void) { return last_error.c_str(); }

const char* graphot_status_name(graphot_status s) {
  switch (s) {
    case GRAPHOT_OK: return "ok";
    case GRAPHOT_E_LABEL: return "label";
    case GRAPHOT_E_SHAPE: return "shape";
    case GRAPHOT_E_NUMERIC: return "numeric";
    case GRAPHOT_E_CONTRACT: return "contract";
    case GRAPHOT_E_VALIDATION: return "validation";
    case GRAPHOT_E_ASSUMPTION: return "assumption";
    case GRAPHOT_E_CAPACITY: return "capacity";
    case GRAPHOT_E_IO: return "io";
    case GRAPHOT_E_ARGUMENT: return "argument";
    case GRAPHOT_E_INTERNAL: return "internal";
  }
  return "unknown";
}

graphot_status graphot_spec_load_file(const char* path, graphot_spec** out) {
  if (!path || !out) return null_arg("path and out");
  return guard([&] { *out = new graphot_spec{graphot::parse_spec_file(path)}; });
}

graphot_status graphot_spec_load_string(const char* json, graphot_spec** out) {
  if (!json || !out) return null_arg("json and out");
  return guard([&] { *out = new graphot_spec{graphot::parse_spec_text(json)}; });
}

void graphot_spec_free(graphot_spec* spec) { delete spec; }

graphot_status graphot_spec_set_threads(graphot_spec* spec, int threads) {
  if (!spec) return null_arg("spec");
  return guard([&] {
    graphot::Overrides o;
    o.threads = threads;
    graphot::apply_overrides(spec->spec, o);
  });
}

graphot_status graphot_spec_set_seed(graphot_spec* spec, uint64_t seed) {
  if (!spec) return null_arg("spec");
  return guard([&] {
    graphot::Overrides o;
    o.seed = seed;
    graphot::apply_overrides(spec->spec, o);
  });
}

graphot_status graphot_spec_set_output(graphot_spec* spec, const char* path) {
  if (!spec || !path) return null_arg("spec and path");
  return guard([&] { spec->spec.output.csv = path; });
}

graphot_status graphot_spec_set_log_domain(graphot_spec* spec, int enabled) {
  if (!spec) return null_arg("spec");
  return guard([&] { spec->spec.solver.log_domain = enabled != 0; });
}

graphot_status graphot_spec_set_max_iter(graphot_spec* spec, long max_iter) {
  if (!spec) return null_arg("spec");
  return guard([&] {
    graphot::Overrides o;
    o.max_iter = max_iter;
    graphot::apply_overrides(spec->spec, o);
  });
}

graphot_status graphot_run(const graphot_spec* spec, graphot_command cmd, int* exit_code) {
  if (!spec || !exit_code) return null_arg("spec and exit_code");
  return guard([&] {
    switch (cmd) {
      case GRAPHOT_CMD_SOLVE: *exit_code = graphot::cmd_solve(spec->spec, std::cerr); break;
      case GRAPHOT_CMD_BENCH: *exit_code = graphot::cmd_bench(spec->spec, std::cerr); break;
      case GRAPHOT_CMD_VALIDATE: *exit_code = graphot::cmd_validate(spec->spec, std::cerr); break;
      default: throw graphot::ArgumentError("unknown command " + std::to_string(static_cast<int>(cmd)));
    }
  });
}

graphot_status graphot_tree_create(double epsilon, graphot_tree** out) {
  if (!out) return null_arg("out");
  return guard([&] {
    if (!(epsilon > 0.0)) throw graphot::ArgumentError("epsilon must be positive");
    *out = new graphot_tree{};
    (*out)->problem.epsilon = epsilon;
  });
}

void graphot_tree_free(graphot_tree* tree) { delete tree; }

graphot_status graphot_tree_add_node(graphot_tree* tree, int id, size_t size) {
  if (!tree) return null_arg("tree");
  return guard([&] {
    auto& p = tree->problem;
    if (p.graph.has_node(id)) throw graphot::ArgumentError("node " + std::to_string(id) + " already exists");
    if (size == 0) throw graphot::ArgumentError("node size must be positive");
    p.graph.nodes.push_back(id);
    p.sizes[id] = size;
  });
}

graphot_status graphot_tree_add_edge(graphot_tree* tree, int first, int second, const double* cost,
                                     size_t len) {
  if (!tree || !cost) return null_arg("tree and cost");
  return guard([&] {
    auto& p = tree->problem;
    for (int j : {first, second})
      if (!p.graph.has_node(j)) throw graphot::LabelError("unknown node " + std::to_string(j));
    std::size_t r = p.sizes[first], c = p.sizes[second];
    if (len != r * c)
      throw graphot::ShapeError("edge cost needs " + std::to_string(r * c) + " entries, got " +
                                std::to_string(len));
    p.graph.edges.push_back({first, second});
    p.costs.emplace_back(r, c, std::vector<double>(cost, cost + len));
  });
}

graphot_status graphot_tree_set_marginal(graphot_tree* tree, int id, const double* mu, size_t len) {
  if (!tree || !mu) return null_arg("tree and mu");
  return guard([&] {
    auto& p = tree->problem;
    if (!p.graph.has_node(id)) throw graphot::LabelError("unknown node " + std::to_string(id));
    if (len != p.sizes[id])
      throw graphot::ShapeError("marginal of node " + std::to_string(id) + " needs " +
                                std::to_string(p.sizes[id]) + " entries");
    if (!p.graph.is_constrained(id)) p.graph.constrained.push_back(id);
    p.marginals[id] = std::vector<double>(mu, mu + len);
  });
}

graphot_status graphot_tree_validate(const graphot_tree* tree) {
  if (!tree) return null_arg("tree");
  return guard([&] {
    auto v = graphot::validate_problem(tree->problem);
    if (!v.empty()) throw graphot::ValidationError(graphot::format_violations(v));
  });
}

graphot_status graphot_tree_solve(const graphot_tree* tree, double delta_prime, long max_iter, int threads,
                                  graphot_result** out) {
  if (!tree || !out) return null_arg("tree and out");
  return guard([&] {
    auto v = graphot::validate_problem(tree->problem);
    if (!v.empty()) throw graphot::ValidationError(graphot::format_violations(v));
    graphot::TreeSolver solver(tree->problem);
    graphot::TreeSolverOptions opt;
    opt.delta_prime = delta_prime;
    opt.max_iter = max_iter;
    opt.threads = threads;
    opt.instrument = false;
    auto res = new graphot_result{};
    try {
      res->report = solver.solve(opt);
      const auto& part = solver.partition();
      const auto& side = res->report.last_partition == 1 ? part.s2 : part.s1;
      auto rounded = graphot::round_tree(tree->problem, solver.plans(), side, threads);
      res->plans = std::move(rounded.plans);
      res->report.rounded_cost = rounded.report.cost_after;
    } catch (...) {
      delete res;
      throw;
    }
    *out = res;
  });
}

void graphot_result_free(graphot_result* result) { delete result; }

int graphot_result_converged(const graphot_result* r) { return r && r->report.converged ? 1 : 0; }
long graphot_result_iterations(const graphot_result* r) { return r ? r->report.iterations : -1; }
double graphot_result_residual(const graphot_result* r) { return r ? r->report.final_residual : NAN; }
double graphot_result_cost(const graphot_result* r) { return r ? r->report.cost : NAN; }
double graphot_result_rounded_cost(const graphot_result* r) { return r ? r->report.rounded_cost : NAN; }
double graphot_result_iteration_bound(const graphot_result* r) { return r ? r->report.iteration_bound : NAN; }
size_t graphot_result_num_plans(const graphot_result* r) { return r ? r->plans.size() : 0; }

graphot_status graphot_result_plan(const graphot_result* r, size_t edge, double* out, size_t len) {
  if (!r || !out) return null_arg("result and out");
  return guard([&] {
    if (edge >= r->plans.size()) throw graphot::ArgumentError("edge index out of range");
    const auto& m = r->plans[edge];
    if (len != m.a.size())
      throw graphot::ShapeError("plan has " + std::to_string(m.a.size()) + " entries, buffer has " +
                                std::to_string(len));
    std::copy(m.a.begin(), m.a.end(), out);
  });
}

}  // extern "C"
