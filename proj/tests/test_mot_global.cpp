#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graphot/error.hpp"
#include "graphot/lp_oracle.hpp"
#include "graphot/mot_global.hpp"
#include "graphot/problems.hpp"
#include "oracles.hpp"

using namespace graphot;

namespace {

// Full joint exp(sum of clique log potentials), built entry by entry.
LabeledTensor dense_joint(const IsbpSolver& s) {
  const auto& p = s.problem();
  std::size_t n = volume(p.axes);
  LabeledTensor joint(p.axes, std::vector<double>(n, 0.0));
  std::size_t flat = 0;
  oracle::for_each_index(p.axes, [&](const std::map<Label, std::size_t>& idx) {
    double lg = 0.0;
    for (std::size_t c = 0; c < p.tree.cliques.size(); ++c) lg += oracle::entry(s.log_potential(static_cast<int>(c)), idx);
    joint[flat++] = std::exp(lg);
  });
  return joint;
}

double max_rel_gap(const LabeledTensor& got, const LabeledTensor& want) {
  double scale = 0.0, gap = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) scale = std::max(scale, std::abs(want[i]));
  for (std::size_t i = 0; i < want.size(); ++i) gap = std::max(gap, std::abs(got[i] - want[i]));
  return gap / scale;
}

void check_projections(const IsbpSolver& s, double tol) {
  auto joint = dense_joint(s);
  for (std::size_t c = 0; c < s.problem().tree.cliques.size(); ++c) {
    auto got = s.projection_via_messages(static_cast<int>(c));
    auto want = oracle::project(joint, s.problem().tree.cliques[c]);
    REQUIRE(got.axes() == want.axes());
    CHECK(max_rel_gap(got, want) <= tol);
  }
}

JtProblem random_chain(SplitMix64& rng, int J, std::size_t d, double eps) {
  JtProblem p;
  for (int j = 1; j <= J; ++j) p.axes.push_back({j, d});
  for (int j = 1; j < J; ++j) {
    int id = static_cast<int>(p.tree.cliques.size());
    p.tree.cliques.push_back({j, j + 1});
    std::vector<double> v(d * d);
    for (double& x : v) x = rng.uniform();
    p.costs.push_back(LabeledTensor::matrix(j, j + 1, d, d, v));
    if (id > 0) p.tree.edges.push_back({id - 1, id});
  }
  for (int j : {1, J}) {
    int leaf = static_cast<int>(p.tree.cliques.size());
    p.tree.cliques.push_back({j});
    p.costs.push_back(std::nullopt);
    p.tree.edges.push_back({j == 1 ? 0 : J - 2, leaf});
    p.tree.constrained.push_back(leaf);
    p.marginals[leaf] = LabeledTensor::vector(j, oracle::random_simplex(rng, d));
  }
  p.epsilon = eps;
  return p;
}

void randomize_leaves(IsbpSolver& s, SplitMix64& rng) {
  for (int c : s.problem().tree.constrained) {
    auto mu = s.problem().marginals.at(c);
    std::vector<double> v(mu.size());
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    s.set_log_u(c, LabeledTensor(mu.axes(), v));
  }
}

MotProblem two_marginal(std::vector<double> c, std::vector<double> mu1, std::vector<double> mu2, double eps) {
  std::size_t d = mu1.size();
  MotProblem p;
  p.axes = {{1, d}, {2, d}};
  p.cost = LabeledTensor::matrix(1, 2, d, d, std::move(c));
  p.constraints = {{{1}, LabeledTensor::vector(1, std::move(mu1))}, {{2}, LabeledTensor::vector(2, std::move(mu2))}};
  p.epsilon = eps;
  return p;
}

}  // namespace

TEST_CASE("dense scaling with zero cost gives the product of marginals") {
  auto p = two_marginal(std::vector<double>(9, 0.0), {0.2, 0.3, 0.5}, {0.6, 0.1, 0.3}, 1.0);
  SinkhornOptions o;
  o.max_iter = 1;
  auto r = sinkhorn_full(p, o);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(r.plan.at({i, k}) == doctest::Approx(p.constraints[0].mu[i] * p.constraints[1].mu[k]).epsilon(1e-14));
  CHECK(r.report.final_residual <= 1e-14);
}

TEST_CASE("dense scaling on a 2x2 problem matches a scalar fixed point") {
  auto p = two_marginal({0, 1, 1, 0}, {0.5, 0.5}, {0.5, 0.5}, 1.0);
  SinkhornOptions o;
  o.tol = 1e-14;
  auto r = sinkhorn_full(p, o);
  REQUIRE(r.report.converged);
  // Plain alternating scaling on 2-vectors.
  double k[2][2] = {{1.0, std::exp(-1.0)}, {std::exp(-1.0), 1.0}};
  double a[2] = {1, 1}, b[2] = {1, 1};
  for (int it = 0; it < 200; ++it) {
    for (int i = 0; i < 2; ++i) a[i] = 0.5 / (k[i][0] * b[0] + k[i][1] * b[1]);
    for (int j = 0; j < 2; ++j) b[j] = 0.5 / (k[0][j] * a[0] + k[1][j] * a[1]);
  }
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(r.plan.at({i, j}) == doctest::Approx(a[i] * k[i][j] * b[j]).epsilon(1e-12));
  CHECK(r.plan.at({0, 0}) == doctest::Approx(r.plan.at({1, 1})));
  CHECK(r.plan.at({0, 1}) == doctest::Approx(r.plan.at({1, 0})));
}

TEST_CASE("dense scaling on a barycenter-shaped three-marginal problem") {
  SplitMix64 rng(3);
  std::vector<double> x{0.0, 0.5, 1.0};
  MotProblem p;
  p.axes = {{0, 3}, {1, 3}, {2, 3}};
  std::vector<double> c(27);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t e = 0; e < 3; ++e)
        c[(a * 3 + b) * 3 + e] = (x[a] - x[b]) * (x[a] - x[b]) + (x[a] - x[e]) * (x[a] - x[e]);
  p.cost = LabeledTensor(p.axes, c);
  p.constraints = {{{1}, LabeledTensor::vector(1, oracle::random_simplex(rng, 3))},
                   {{2}, LabeledTensor::vector(2, oracle::random_simplex(rng, 3))}};
  p.epsilon = 0.1;
  SinkhornOptions o;
  o.tol = 1e-8;
  auto r = sinkhorn_full(p, o);
  REQUIRE(r.report.converged);
  for (const auto& con : p.constraints)
    CHECK(oracle::l1(oracle::to_vec(oracle::project(r.plan, con.labels)), oracle::to_vec(con.mu)) <= 1e-8);
  for (std::size_t i = 0; i < r.plan.size(); ++i) CHECK(r.plan[i] > 0.0);
  for (std::size_t t = 1; t < r.report.dual_trace.size(); ++t)
    CHECK(r.report.dual_trace[t] >= r.report.dual_trace[t - 1] - 1e-12);
  auto lp = lp_oracle(p);
  CHECK(lp.cost <= r.report.cost + 1e-9);
}

TEST_CASE("zero marginal entries") {
  auto p = two_marginal({0, 1, 1, 0}, {1.0, 0.0}, {0.5, 0.5}, 1.0);
  CHECK_FALSE(validate_problem(p).empty());
  CHECK_THROWS_AS(sinkhorn_full(p, {}), ValidationError);
  p.clamp_zero = true;
  CHECK(validate_problem(p).empty());
  SinkhornOptions o;
  o.tol = 1e-10;
  auto r = sinkhorn_full(p, o);
  CHECK(r.report.converged);
  CHECK(r.plan.at({1, 0}) < 1e-250);
}

TEST_CASE("ISBP on a bi-marginal junction tree matches dense scaling") {
  JtProblem jp;
  jp.axes = {{1, 3}, {2, 3}};
  jp.tree.cliques = {{1}, {1, 2}, {2}};
  jp.tree.edges = {{0, 1}, {1, 2}};
  jp.tree.constrained = {0, 2};
  SplitMix64 rng(4);
  std::vector<double> c(9);
  for (double& x : c) x = rng.uniform();
  jp.costs = {std::nullopt, LabeledTensor::matrix(1, 2, 3, 3, c), std::nullopt};
  jp.marginals[0] = LabeledTensor::vector(1, oracle::random_simplex(rng, 3));
  jp.marginals[2] = LabeledTensor::vector(2, oracle::random_simplex(rng, 3));
  jp.epsilon = 0.3;
  IsbpSolver s(jp);
  IsbpOptions io;
  io.tol = 1e-13;
  auto r = s.solve(io);
  REQUIRE(r.converged);
  SinkhornOptions so;
  so.tol = 1e-13;
  auto d = sinkhorn_full(densify(jp), so);
  auto plan = s.plans()[1];
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(plan[i] - d.plan[i]) <= 1e-10);
}

TEST_CASE("ISBP on a single constrained clique with zero cost") {
  JtProblem jp;
  jp.axes = {{1, 2}, {2, 2}};
  jp.tree.cliques = {{1, 2}};
  jp.tree.constrained = {0};
  jp.costs = {std::nullopt};
  jp.marginals[0] = LabeledTensor::matrix(1, 2, 2, 2, {0.1, 0.2, 0.3, 0.4});
  IsbpSolver s(jp);
  auto r = s.solve({});
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  auto b = s.plans()[0];
  for (std::size_t i = 0; i < 4; ++i) CHECK(b[i] == doctest::Approx(jp.marginals[0][i]).epsilon(1e-14));
}

TEST_CASE("projection by messages equals dense projection") {
  SplitMix64 rng(6);
  SUBCASE("uniform chain") {
    JtProblem p;
    p.axes = {{1, 2}, {2, 2}, {3, 2}, {4, 2}};
    p.tree.cliques = {{1, 2}, {2, 3}, {3, 4}};
    p.tree.edges = {{0, 1}, {1, 2}};
    p.costs = {std::nullopt, std::nullopt, std::nullopt};
    IsbpSolver s(p);
    auto mid = s.projection_via_messages(1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(mid[i] == doctest::Approx(4.0));
  }
  SUBCASE("random chain") {
    auto p = random_chain(rng, 4, 3, 0.5);
    IsbpSolver s(p);
    randomize_leaves(s, rng);
    check_projections(s, 1e-10);
  }
  SUBCASE("euler junction tree") {
    std::vector<int> sigma{3, 1, 0, 2};
    for (auto variant : {EulerVariant::hard, EulerVariant::relaxed}) {
      auto e = euler_problem(5, GridSpec{4, 0, 1}, sigma, variant, 0.5);
      IsbpSolver s(e.jt);
      randomize_leaves(s, rng);
      check_projections(s, 1e-9);
    }
  }
  SUBCASE("spline and wls junction trees") {
    MarginalGen gen;
    auto sp = spline_problem(uniform_times(3), GridSpec{3, 0, 1}, GridSpec{2, -1, 1}, gen, 1.0);
    IsbpSolver s(sp.jt);
    randomize_leaves(s, rng);
    check_projections(s, 1e-9);
    auto w = wls_problem(3, uniform_times(3), GridSpec{3, 0, 1}, gen, 10.0, 2.0);
    IsbpSolver sw(w.jt);
    randomize_leaves(sw, rng);
    check_projections(sw, 1e-9);
  }
}

TEST_CASE("ISBP on the barycenter instance and schedule independence") {
  MarginalGen gen;
  auto b = barycenter_problem(3, GridSpec{10, 0, 1}, gen, 1.0);
  auto jp = b.jt;
  jp.epsilon = 0.2 / (2.0 * 4.0 * std::log(10.0));
  double tol = 0.2 / (8.0 * cost_sum_bound(jp));
  IsbpOptions o;
  o.tol = tol;
  IsbpSolver rr(jp);
  auto r1 = rr.solve(o);
  CHECK(r1.converged);
  o.schedule = Schedule::random;
  o.seed = 99;
  IsbpSolver rnd(jp);
  auto r2 = rnd.solve(o);
  CHECK(r2.converged);
  // The plans at tolerance tol on both schedules differ by at most a few tol.
  auto p1 = rr.plans(), p2 = rnd.plans();
  for (std::size_t c = 0; c < p1.size(); ++c) CHECK(l1_distance(p1[c], p2[c]) <= 10.0 * tol);

  // Tighter tolerance confirms both approach the same fixed point.
  o.tol = 1e-12;
  o.schedule = Schedule::round_robin;
  IsbpSolver tight_a(jp);
  tight_a.solve(o);
  o.schedule = Schedule::random;
  IsbpSolver tight_b(jp);
  tight_b.solve(o);
  auto a = tight_a.plans(), c = tight_b.plans();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(l1_distance(a[k], c[k]) <= 1e-10);
}

TEST_CASE("densify and capacity") {
  MarginalGen gen;
  auto b = barycenter_problem(3, GridSpec{4, 0, 1}, gen, 1.0);
  auto m = densify(b.jt);
  CHECK(m.axes.size() == 4);
  CHECK(m.cost.size() == 256);
  CHECK_THROWS_AS(densify(b.jt, 100), CapacityError);
}
