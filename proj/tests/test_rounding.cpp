#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graphot/error.hpp"
#include "graphot/lp_oracle.hpp"
#include "graphot/problems.hpp"
#include "graphot/rounding.hpp"
#include "oracles.hpp"

using namespace graphot;

namespace {

const std::vector<NodeId>& other_side(const TreeSolver& s, const SolveReport& r) {
  return r.last_partition == 1 ? s.partition().s2 : s.partition().s1;
}

void check_feasible(const TreeProblem& p, const std::vector<Matrix>& plans) {
  CHECK(max_constraint_gap(p, plans) <= 1e-12);
  CHECK(max_node_disagreement(p, plans) <= 1e-12);
}

}  // namespace

TEST_CASE("bi-marginal rounding primitive") {
  Matrix b(2, 2, std::vector<double>{0.3, 0.2, 0.1, 0.4});
  auto same = round_bimarginal(b, b.row_sums());
  CHECK(same.a == b.a);

  Matrix d(2, 2, std::vector<double>{0.5, 0.0, 0.0, 0.5});
  auto r = round_bimarginal(d, {0.6, 0.4});
  auto rows = r.row_sums(), cols = r.col_sums();
  CHECK(rows[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(rows[1] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(cols[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cols[1] == doctest::Approx(0.5).epsilon(1e-15));
  // Row 2 is scaled to 0.4 (0.4 total), its 0.1 deficit on column 2 goes to
  // row 1 through the correction.
  CHECK(r(0, 0) == doctest::Approx(0.5));
  CHECK(r(0, 1) == doctest::Approx(0.1));
  CHECK(r(1, 1) == doctest::Approx(0.4));

  SplitMix64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix m(5, 5);
    for (double& x : m.a) x = rng.uniform(0.01, 1.0);
    double s = m.sum();
    for (double& x : m.a) x /= s;
    auto target = oracle::random_simplex(rng, 5);
    auto out = round_bimarginal(m, target);
    CHECK(oracle::l1(out.row_sums(), target) <= 1e-14);
    CHECK(oracle::l1(out.col_sums(), m.col_sums()) <= 1e-14);
    double moved = 0.0;
    for (std::size_t i = 0; i < 25; ++i) moved += std::abs(out.a[i] - m.a[i]);
    CHECK(moved <= 2.0 * oracle::l1(m.row_sums(), target) + 1e-14);
    for (double x : out.a) CHECK(x >= 0.0);
  }
  CHECK_THROWS_AS(round_bimarginal(b, {0.5, 0.6}), ContractError);
}

TEST_CASE("round_tree on feasible plans changes nothing") {
  TreeProblem p;
  p.graph = {{0, 1, 2}, {{0, 1}, {1, 2}}, {0, 2}};
  p.sizes = {{0, 2}, {1, 2}, {2, 2}};
  p.costs = {Matrix(2, 2, 1.0), Matrix(2, 2, 1.0)};
  p.marginals[0] = {0.5, 0.5};
  p.marginals[2] = {0.5, 0.5};
  std::vector<Matrix> plans{Matrix(2, 2, 0.25), Matrix(2, 2, 0.25)};
  auto r = round_tree(p, plans, {1});
  CHECK(r.plans[0].a == plans[0].a);
  CHECK(r.plans[1].a == plans[1].a);
  CHECK(r.report.cost_delta == 0.0);
  CHECK(r.report.residual == 0.0);
  CHECK_THROWS_AS(round_tree(p, plans, {0, 1}), ContractError);
}

TEST_CASE("rounding an early-stopped single edge") {
  TreeProblem p;
  p.graph = {{0, 1}, {{0, 1}}, {1}};
  p.sizes = {{0, 3}, {1, 3}};
  Matrix c(3, 3);
  SplitMix64 rng(5);
  for (double& x : c.a) x = rng.uniform();
  p.costs = {c};
  p.marginals[1] = {0.2, 0.3, 0.5};
  p.epsilon = 0.1;
  TreeSolver s(p);
  TreeSolverOptions o;
  o.max_iter = 1;
  o.delta_prime = 1e-300;
  auto rep = s.solve(o);
  CHECK_FALSE(rep.converged);
  CHECK(max_constraint_gap(p, s.plans()) > 1e-3);
  auto r = round_tree(p, s.plans(), other_side(s, rep));
  check_feasible(p, r.plans);
  CHECK(r.report.cost_delta <= r.report.bound + 1e-15);
  CHECK(std::abs(r.plans[0].sum() - s.plans()[0].sum()) <= 1e-13);
}

TEST_CASE("rounding after random solves meets the bounds") {
  SplitMix64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    oracle::TreeGenOptions o;
    o.max_edges = 4;
    o.max_d = 4;
    auto p = oracle::random_tree(rng, o);
    double delta = 0.2;
    p.epsilon = recipe_epsilon(delta, p.graph.edges.size(), max_size(p));
    TreeSolver s(p);
    TreeSolverOptions opt;
    opt.delta_prime = recipe_delta_prime(delta, c_inf(p));
    auto r = s.solve(opt);
    REQUIRE(r.converged);
    auto plans = s.plans();
    auto rounded = round_tree(p, plans, other_side(s, r));
    check_feasible(p, rounded.plans);
    CHECK(rounded.report.cost_delta <= rounded.report.bound + 1e-12);
    for (std::size_t e = 0; e < plans.size(); ++e)
      CHECK(std::abs(rounded.plans[e].sum() - plans[e].sum()) <= 1e-13);
    auto lp = lp_oracle(p);
    double E = static_cast<double>(p.graph.edges.size());
    double end_to_end_bound = 2.0 * p.epsilon * E * std::log(static_cast<double>(max_size(p))) +
                    4.0 * c_inf(p) * plan_residual(p, plans).total();
    CHECK(rounded.report.cost_after - lp.cost <= end_to_end_bound + 1e-12);
    CHECK(rounded.report.cost_after - lp.cost <= delta);
  }
}

TEST_CASE("rounding is deterministic across threads") {
  SplitMix64 rng(13);
  oracle::TreeGenOptions o;
  o.min_edges = 6;
  o.max_edges = 9;
  auto p = oracle::random_tree(rng, o);
  TreeSolver s(p);
  TreeSolverOptions opt;
  opt.max_iter = 5;
  opt.delta_prime = 1e-300;
  auto r = s.solve(opt);
  auto a = round_tree(p, s.plans(), other_side(s, r), 1);
  auto b = round_tree(p, s.plans(), other_side(s, r), 4);
  for (std::size_t e = 0; e < a.plans.size(); ++e) CHECK(a.plans[e].a == b.plans[e].a);
}

TEST_CASE("barycenter at d = 10 after rounding") {
  MarginalGen gen;
  auto inst = barycenter_problem(3, GridSpec{10, 0, 1}, gen, 1.0);
  auto p = inst.tree;
  double delta = 0.2;
  p.epsilon = recipe_epsilon(delta, 3, 10);
  TreeSolver s(p);
  TreeSolverOptions opt;
  opt.delta_prime = recipe_delta_prime(delta, c_inf(p));
  auto r = s.solve(opt);
  REQUIRE(r.converged);
  auto rounded = round_tree(p, s.plans(), other_side(s, r));
  check_feasible(p, rounded.plans);
  CHECK(rounded.report.cost_delta <= rounded.report.bound + 1e-12);
}
