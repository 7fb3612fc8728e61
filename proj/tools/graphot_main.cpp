#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "graphot/graphot.h"

namespace {

struct Args {
  std::string spec;
  int threads = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool log_domain = false;
  long max_iter = -1;
};

int fail(graphot_status s) {
  std::fprintf(stderr, "error (%s): %s\n", graphot_status_name(s), graphot_last_error());
  return 1;
}

int run(const Args& a, const CLI::App& sub, graphot_command cmd) {
  graphot_spec* spec = nullptr;
  graphot_status s = graphot_spec_load_file(a.spec.c_str(), &spec);
  if (s != GRAPHOT_OK) return fail(s);
  if (s == GRAPHOT_OK && sub.count("--threads")) s = graphot_spec_set_threads(spec, a.threads);
  if (s == GRAPHOT_OK && sub.count("--seed")) s = graphot_spec_set_seed(spec, a.seed);
  if (s == GRAPHOT_OK && sub.count("--out")) s = graphot_spec_set_output(spec, a.out.c_str());
  if (s == GRAPHOT_OK && a.log_domain) s = graphot_spec_set_log_domain(spec, 1);
  if (s == GRAPHOT_OK && sub.count("--max-iter")) s = graphot_spec_set_max_iter(spec, a.max_iter);
  int code = 1;
  if (s == GRAPHOT_OK) s = graphot_run(spec, cmd, &code);
  graphot_spec_free(spec);
  if (s != GRAPHOT_OK) return fail(s);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-structured multi-marginal optimal transport solvers"};
  app.set_version_flag("--version", graphot_version());
  app.require_subcommand(1);

  Args a;
  struct Cmd {
    const char* name;
    const char* help;
    graphot_command cmd;
  };
  const Cmd cmds[] = {
      {"solve", "Solve the problem described by a spec file", GRAPHOT_CMD_SOLVE},
      {"bench", "Run the sweep described by a spec file", GRAPHOT_CMD_BENCH},
      {"validate", "Check a spec file without solving", GRAPHOT_CMD_VALIDATE},
  };
  std::vector<std::pair<CLI::App*, graphot_command>> subs;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("spec", a.spec, "Problem spec (JSON)")->required();
    sub->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", a.seed, "Seed for marginals and schedules");
    sub->add_option("--out", a.out, "CSV output path");
    sub->add_flag("--log-domain", a.log_domain, "Force log-domain arithmetic");
    sub->add_option("--max-iter", a.max_iter, "Iteration limit")->check(CLI::NonNegativeNumber);
    subs.push_back({sub, c.cmd});
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  for (auto& [sub, cmd] : subs)
    if (sub->parsed()) return run(a, *sub, cmd);
  return 1;
}
