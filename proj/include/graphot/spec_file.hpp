#pragma once

// Problem-spec documents (JSON) and the solve / bench / validate commands
// built on them.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphot/graph_local.hpp"
#include "graphot/mot_global.hpp"
#include "graphot/problems.hpp"
#include "graphot/tree_local.hpp"

namespace graphot {

inline constexpr int kFormatVersion = 1;

struct SolverConfig {
  std::string method = "tree-local";  // tree-local | global-isbp | graph-local | dense
  double delta = 0.2;
  std::optional<double> epsilon;
  std::optional<double> delta_prime;
  long max_iter = 100000;
  Schedule schedule = Schedule::round_robin;
  std::uint64_t seed = 0;
  int threads = 1;
  bool log_domain = false;
  bool round = true;
};

struct OutputConfig {
  std::string csv;             // empty: standard output
  std::string trace = "full";  // full | summary
  bool timing = false;
};

struct SweepConfig {
  std::string parameter = "d";  // d | edges
  std::vector<long> values;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<std::string> methods{"tree-local", "global-isbp"};
};

struct ProblemSpec {
  nlohmann::json problem;
  GridSpec grid;
  GridSpec grid_v{1, 0.0, 1.0};
  MarginalGen marginals;
  SolverConfig solver;
  OutputConfig output;
  std::optional<SweepConfig> sweep;
};

/// Schema checks reject unknown keys, wrong types and out-of-range values
/// with ArgumentError.
ProblemSpec parse_spec(const nlohmann::json& doc);
ProblemSpec parse_spec_text(const std::string& text);
ProblemSpec parse_spec_file(const std::string& path);

struct Overrides {
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool log_domain = false;
  std::optional<long> max_iter;
};

void apply_overrides(ProblemSpec& spec, const Overrides& o);

/// The problem in every form its family supports.
struct Instance {
  std::string family;
  std::optional<TreeProblem> tree;
  std::optional<JtProblem> jt;
  std::optional<GraphLocalProblem> graph;
};

Instance build_instance(const ProblemSpec& spec);
/// Violations of every form present in the instance.
std::vector<Violation> validate_instance(const Instance& inst);

struct RunResult {
  SolveReport report;
  std::size_t edges = 0;
  std::size_t d = 0;
};

/// Runs one solve with the spec's solver settings; the epsilon and stopping
/// threshold follow the recipe for `delta` unless set explicitly.
RunResult run_solver(const Instance& inst, const SolverConfig& cfg);

/// Exit codes: 0 converged, 2 iteration limit reached, 1 invalid input.
int cmd_solve(const ProblemSpec& spec, std::ostream& diag);
int cmd_bench(const ProblemSpec& spec, std::ostream& diag);
int cmd_validate(const ProblemSpec& spec, std::ostream& diag);

/// Largest node-to-node distance of the underlying tree of an instance.
std::size_t instance_diameter(const Instance& inst);

}  // namespace graphot
