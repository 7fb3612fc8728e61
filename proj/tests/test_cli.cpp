#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphot/error.hpp"
#include "graphot/lp_oracle.hpp"
#include "graphot/spec_file.hpp"

using namespace graphot;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "graphot_test_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    out.push_back(cells);
  }
  return out;
}

json barycenter_doc() {
  return json::parse(R"({
    "format_version": 1,
    "problem": {"family": "barycenter", "n_leaves": 3},
    "grid": {"d": 8},
    "solver": {"method": "tree-local", "delta": 0.2},
    "output": {"trace": "summary"}
  })");
}

json tree_doc(std::vector<double> mu) {
  json d = {{"format_version", 1},
            {"problem",
             {{"family", "custom"},
              {"kind", "tree"},
              {"nodes", json::array({{{"id", 0}, {"size", 2}},
                                     {{"id", 1}, {"size", 2}, {"mu", mu}},
                                     {{"id", 2}, {"size", 2}, {"mu", {0.5, 0.5}}}})},
              {"edges", json::array({{{"nodes", {0, 1}}, {"cost", {0.0, 1.0, 1.0, 0.0}}},
                                     {{"nodes", {0, 2}}, {"cost", {0.0, 1.0, 1.0, 0.0}}}})}}},
            {"solver", {{"delta", 0.1}}},
            {"output", {{"trace", "summary"}}}};
  return d;
}

}  // namespace

TEST_CASE("spec parsing defaults and schema errors") {
  auto s = parse_spec(barycenter_doc());
  CHECK(s.grid.d == 8);
  CHECK(s.solver.method == "tree-local");
  CHECK(s.solver.max_iter == 100000);
  CHECK(s.output.trace == "summary");
  CHECK_FALSE(s.sweep);

  auto bad = [](auto edit) {
    json d = barycenter_doc();
    edit(d);
    CHECK_THROWS_AS(parse_spec(d), ArgumentError);
  };
  bad([](json& d) { d["colour"] = 1; });
  bad([](json& d) { d["solver"]["tolerance"] = 1e-3; });
  bad([](json& d) { d["problem"]["J"] = 4; });
  bad([](json& d) { d["format_version"] = 2; });
  bad([](json& d) { d.erase("format_version"); });
  bad([](json& d) { d["solver"]["method"] = "newton"; });
  bad([](json& d) { d["solver"]["delta"] = -1.0; });
  bad([](json& d) { d["output"]["trace"] = "some"; });
  bad([](json& d) { d["grid"]["d"] = 0; });
  bad([](json& d) { d["problem"]["family"] = "knot"; });
  CHECK_THROWS_AS(parse_spec_text("{not json"), ArgumentError);
  CHECK_THROWS_AS(parse_spec_file(scratch("missing.json").string()), IoError);
}

TEST_CASE("overrides") {
  json d = barycenter_doc();
  d["sweep"] = {{"values", {4, 8}}};
  auto s = parse_spec(d);
  Overrides o;
  o.seed = 10;
  o.threads = 3;
  o.max_iter = 7;
  o.log_domain = true;
  o.out = "x.csv";
  apply_overrides(s, o);
  CHECK(s.solver.threads == 3);
  CHECK(s.solver.max_iter == 7);
  CHECK(s.solver.log_domain);
  CHECK(s.output.csv == "x.csv");
  CHECK(s.marginals.seed == 10);
  CHECK(s.sweep->seeds == std::vector<std::uint64_t>{10, 11, 12, 13, 14});
}

TEST_CASE("validate command") {
  std::ostringstream diag;
  CHECK(cmd_validate(parse_spec(barycenter_doc()), diag) == 0);
  CHECK(diag.str().find("valid") != std::string::npos);
  std::ostringstream bad;
  CHECK(cmd_validate(parse_spec(tree_doc({1.0, 0.0})), bad) == 1);
  CHECK(bad.str().find("node 1") != std::string::npos);
}

TEST_CASE("solve command output and exit codes") {
  auto out = scratch("solve.csv");
  json d = barycenter_doc();
  d["output"] = {{"csv", out.string()}, {"trace", "full"}};
  std::ostringstream diag;
  REQUIRE(cmd_solve(parse_spec(d), diag) == 0);
  auto r = rows(slurp(out));
  REQUIRE(r.size() >= 3);
  CHECK(r[0][0] == "format_version");
  CHECK(r[0].size() == 15);
  CHECK(r[1][1] == "trace");
  CHECK(r[1][3] == "0");
  CHECK(r.back()[1] == "summary");
  CHECK(r.back()[7] == "1");
  CHECK(r.back()[6].empty());
  long iters = std::stol(r.back()[3]);
  CHECK(r.size() == static_cast<std::size_t>(iters) + 3);

  d["solver"]["max_iter"] = 1;
  std::ostringstream capped;
  CHECK(cmd_solve(parse_spec(d), capped) == 2);
  CHECK(capped.str().find("stopped after") != std::string::npos);

  for (const char* m : {"graph-local", "global-isbp", "dense"}) {
    d["solver"]["method"] = m;
    d["solver"].erase("max_iter");
    d["grid"]["d"] = 4;
    std::ostringstream dm;
    CHECK_MESSAGE(cmd_solve(parse_spec(d), dm) == 0, m);
  }

  std::ostringstream tree_diag;
  json t = tree_doc({0.5, 0.5});
  t["output"]["csv"] = out.string();
  CHECK(cmd_solve(parse_spec(t), tree_diag) == 0);
  auto tr = rows(slurp(out));
  CHECK(std::stod(tr.back()[9]) <= 1e-9);  // rounded cost of the identity coupling
}

TEST_CASE("inapplicable methods are reported") {
  json d = json::parse(R"({
    "format_version": 1,
    "problem": {"family": "wls", "J": 3},
    "grid": {"d": 4},
    "solver": {"method": "tree-local"}
  })");
  std::ostringstream diag;
  CHECK(cmd_solve(parse_spec(d), diag) == 1);
  CHECK(diag.str().find("tree-local") != std::string::npos);
}

TEST_CASE("bench is deterministic and agrees with solve") {
  auto out = scratch("bench.csv");
  json d = barycenter_doc();
  d["sweep"] = {{"parameter", "d"}, {"values", {6}}, {"seeds", {3}}, {"methods", {"tree-local"}}};
  d["output"] = {{"csv", out.string()}};
  std::ostringstream diag;
  REQUIRE(cmd_bench(parse_spec(d), diag) == 0);
  std::string first = slurp(out);
  REQUIRE(cmd_bench(parse_spec(d), diag) == 0);
  CHECK(slurp(out) == first);
  auto b = rows(first);
  REQUIRE(b.size() == 2);
  CHECK(b[0].size() == 17);
  CHECK(b[1][1] == "tree-local");
  CHECK(b[1][4] == "3");
  CHECK(b[1][11] == "1");

  json s = barycenter_doc();
  s["grid"]["d"] = 6;
  s["marginals"] = {{"seed", 3}};
  s["output"] = {{"csv", out.string()}, {"trace", "summary"}};
  REQUIRE(cmd_solve(parse_spec(s), diag) == 0);
  auto sr = rows(slurp(out));
  CHECK(sr.back()[3] == b[1][8]);
}

TEST_CASE("linear program oracle") {
  TreeProblem p;
  p.graph.nodes = {0, 1, 2};
  p.graph.edges = {{1, 0}, {0, 2}};
  p.graph.constrained = {1, 2};
  p.sizes = {{0, 2}, {1, 2}, {2, 2}};
  Matrix flip(2, 2, {0.0, 1.0, 1.0, 0.0});
  p.costs = {flip, flip};
  p.marginals = {{1, {0.5, 0.5}}, {2, {0.5, 0.5}}};
  auto r = lp_oracle(p);
  CHECK(r.cost == doctest::Approx(0.0));
  for (const auto& plan : r.plans) {
    CHECK(plan(0, 0) == doctest::Approx(0.5));
    CHECK(plan(1, 1) == doctest::Approx(0.5));
  }
  p.marginals = {{1, {1.0, 0.0}}, {2, {0.0, 1.0}}};
  CHECK(lp_oracle(p).cost == doctest::Approx(1.0));

  p.sizes = {{0, 50}, {1, 50}, {2, 50}};
  Matrix ones(50, 50, std::vector<double>(2500, 1.0));
  p.costs = {ones, ones};
  p.marginals = {{1, std::vector<double>(50, 0.02)}, {2, std::vector<double>(50, 0.02)}};
  CHECK_THROWS_AS(lp_oracle(p), CapacityError);

  Matrix a(1, 2, {1.0, 1.0});
  auto lp = solve_standard_lp(a, {1}, {2, 3});
  CHECK(lp.cost == doctest::Approx(2.0));
  CHECK_THROWS_AS(solve_standard_lp(a, {-1}, {2, 3}), ContractError);
}
