#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "graphot/error.hpp"
#include "graphot/lp_oracle.hpp"
#include "graphot/problems.hpp"
#include "oracles.hpp"

using namespace graphot;

namespace {

// Integral of the squared second derivative of the cubic through (x0, v0) at
// 0 and (x1, v1) at h; the second derivative is linear so the formula is exact.
double hermite_energy(double x0, double v0, double x1, double v1, double h) {
  double a = 6.0 * (x1 - x0) / (h * h) - (4.0 * v0 + 2.0 * v1) / h;
  double b = -6.0 * (x1 - x0) / (h * h) + (2.0 * v0 + 4.0 * v1) / h;
  return h / 3.0 * (a * a + a * b + b * b);
}

}  // namespace

TEST_CASE("lognormal marginals") {
  MarginalGen gen;
  CHECK(lognormal_marginals(gen, GridSpec{1, 0, 1}, 2) == std::vector<std::vector<double>>{{1.0}, {1.0}});
  auto a = lognormal_marginals(gen, GridSpec{20, 0, 1}, 4);
  auto b = lognormal_marginals(gen, GridSpec{20, 0, 1}, 4);
  CHECK(a == b);
  gen.seed = 1;
  CHECK(lognormal_marginals(gen, GridSpec{20, 0, 1}, 4) != a);
  for (const auto& m : a) {
    double s = std::accumulate(m.begin(), m.end(), 0.0);
    CHECK(std::abs(s - 1.0) <= 1e-14);
    for (double v : m) CHECK(v > 0.0);
    // Cell masses of a unimodal density rise then fall.
    std::size_t peak = std::max_element(m.begin(), m.end()) - m.begin();
    for (std::size_t i = 1; i <= peak; ++i) CHECK(m[i] >= m[i - 1]);
    for (std::size_t i = peak + 1; i < m.size(); ++i) CHECK(m[i] <= m[i - 1]);
  }
  CHECK(a[0] != a[1]);
  gen.scale = 0.0;
  CHECK_THROWS_AS(lognormal_marginals(gen, GridSpec{5, 0, 1}, 1), ArgumentError);
}

TEST_CASE("explicit marginals and grids") {
  MarginalGen gen;
  gen.kind = MarginalGen::Kind::explicit_values;
  gen.values = {{0.5, 0.5}};
  CHECK(make_marginals(gen, GridSpec{2, 0, 1}, 1) == gen.values);
  CHECK_THROWS_AS(make_marginals(gen, GridSpec{2, 0, 1}, 2), ArgumentError);
  CHECK_THROWS_AS(make_marginals(gen, GridSpec{3, 0, 1}, 1), ArgumentError);
  CHECK(GridSpec{3, -1, 1}.points() == std::vector<double>{-1, 0, 1});
  CHECK(GridSpec{1, 2, 3}.points() == std::vector<double>{2});
  CHECK_THROWS_AS((GridSpec{3, 1, 1}.points()), ArgumentError);
  CHECK(uniform_times(1) == std::vector<double>{0});
  CHECK(uniform_times(3) == std::vector<double>{0, 0.5, 1});
}

TEST_CASE("squared distance costs are symmetric with zero diagonal") {
  auto x = GridSpec{7, 0, 1}.points();
  auto c = squared_distance(x, x);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(c(i, i) == 0.0);
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(c(i, j) == c(j, i));
      CHECK(c(i, j) == doctest::Approx((x[i] - x[j]) * (x[i] - x[j])));
    }
  }
}

TEST_CASE("barycenter instance") {
  MarginalGen gen;
  auto b = barycenter_problem(3, GridSpec{6, 0, 1}, gen, 0.5);
  CHECK(validate_problem(b.tree).empty());
  CHECK(validate_problem(b.jt).empty());
  CHECK(b.tree.graph.edges.size() == 3);
  CHECK_FALSE(b.tree.graph.is_constrained(0));
  CHECK(b.jt.tree.cliques.size() == 7);
  CHECK_THROWS_AS(barycenter_problem(1, GridSpec{6, 0, 1}, gen, 0.5), ArgumentError);

  SUBCASE("identical leaves put the barycenter on them") {
    gen.kind = MarginalGen::Kind::explicit_values;
    std::vector<double> mu{0.1, 0.35, 0.2, 0.3, 0.05};
    gen.values = {mu, mu, mu};
    auto same = barycenter_problem(3, GridSpec{5, 0, 1}, gen, 1.0);
    auto lp = lp_oracle(same.tree);
    CHECK(std::abs(lp.cost) <= 1e-10);
    const auto& p = lp.plans[0];
    for (std::size_t i = 0; i < 5; ++i) {
      double center = 0.0;
      for (std::size_t k = 0; k < 5; ++k) center += p(i, k);
      CHECK(center == doctest::Approx(mu[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("weighted least squares costs against the full cost") {
  MarginalGen gen;
  std::vector<double> times{0.1, 0.5, 0.8};
  double alpha = 10.0;
  auto w = wls_problem(3, times, GridSpec{3, 0, 1}, gen, alpha, 1.0);
  CHECK(validate_problem(w.graph).empty());
  CHECK(validate_problem(w.jt).empty());
  auto dense = densify(w.jt);
  auto x = GridSpec{3, 0, 1}.points();
  std::size_t checked = 0;
  oracle::for_each_index(dense.axes, [&](const std::map<Label, std::size_t>& idx) {
    std::vector<double> pt(5);
    for (const auto& [l, i] : idx) pt[l] = x[i];
    CHECK(oracle::entry(dense.cost, idx) == doctest::Approx(wls_cost(pt, times, alpha)).epsilon(1e-12));
    ++checked;
  });
  CHECK(checked == 243);
  // The graph cliques carry the same costs as the junction tree cliques.
  double gsum = 0.0, jsum = 0.0;
  for (const auto& [c, t] : w.graph.costs)
    for (double v : t.values()) gsum += v;
  for (const auto& t : w.jt.costs)
    if (t)
      for (double v : t->values()) jsum += v;
  CHECK(gsum == doctest::Approx(jsum));

  CHECK_THROWS_AS(wls_problem(3, {0.5, 0.2, 0.9}, GridSpec{3, 0, 1}, gen, alpha, 1.0), ValidationError);
  CHECK_THROWS_AS(wls_problem(3, {0.1, 0.2, 1.5}, GridSpec{3, 0, 1}, gen, alpha, 1.0), ValidationError);
  CHECK_THROWS_AS(wls_problem(3, times, GridSpec{3, 0, 1}, gen, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(wls_problem(2, times, GridSpec{3, 0, 1}, gen, alpha, 1.0), ValidationError);
}

TEST_CASE("spline segment cost is the cubic bending energy") {
  SplitMix64 rng(8);
  for (int i = 0; i < 50; ++i) {
    double x0 = rng.uniform(-1, 1), x1 = rng.uniform(-1, 1), v0 = rng.uniform(-2, 2), v1 = rng.uniform(-2, 2);
    double t0 = rng.uniform(), h = rng.uniform(0.05, 1.0);
    CHECK(spline_segment_cost(x0, v0, x1, v1, t0, t0 + h) ==
          doctest::Approx(hermite_energy(x0, v0, x1, v1, h)).epsilon(1e-10));
  }
  CHECK(spline_segment_cost(0.0, 0.0, 0.3, 0.0, 0.0, 0.5) == doctest::Approx(12.0 * 0.09 / 0.125));
  CHECK(spline_segment_cost(0.1, 0.6, 0.4, 0.6, 0.0, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("spline instance") {
  MarginalGen gen;
  std::vector<double> times{0.0, 0.4, 1.0};
  GridSpec gx{3, 0, 1}, gv{2, -1, 1};
  auto s = spline_problem(times, gx, gv, gen, 1.0);
  CHECK(validate_problem(s.graph).empty());
  CHECK(validate_problem(s.jt).empty());
  auto dense = densify(s.jt);
  auto xs = gx.points(), vs = gv.points();
  oracle::for_each_index(dense.axes, [&](const std::map<Label, std::size_t>& idx) {
    double want = 0.0;
    for (std::size_t j = 0; j + 1 < times.size(); ++j)
      want += hermite_energy(xs[idx.at(spline_x(j))], vs[idx.at(spline_v(j))], xs[idx.at(spline_x(j + 1))],
                             vs[idx.at(spline_v(j + 1))], times[j + 1] - times[j]);
    CHECK(oracle::entry(dense.cost, idx) == doctest::Approx(want).epsilon(1e-10));
  });
  CHECK(s.graph.marginals.size() == times.size());
  CHECK_THROWS_AS(spline_problem({0.0}, gx, gv, gen, 1.0), ArgumentError);
  CHECK_THROWS_AS(spline_problem({0.0, 0.0}, gx, gv, gen, 1.0), ValidationError);
}

TEST_CASE("euler instances") {
  GridSpec g{3, 0, 1};
  CHECK_THROWS_AS(euler_problem(4, g, {0, 1}, EulerVariant::hard, 1.0), ValidationError);
  CHECK_THROWS_AS(euler_problem(4, g, {0, 1, 1}, EulerVariant::hard, 1.0), ValidationError);
  CHECK_THROWS_AS(euler_problem(2, g, {0, 1, 2}, EulerVariant::hard, 1.0), ArgumentError);

  std::vector<int> sigma{2, 0, 1};
  auto x = g.points();
  for (auto variant : {EulerVariant::hard, EulerVariant::relaxed}) {
    auto e = euler_problem(4, g, sigma, variant, 1.0);
    CHECK(validate_problem(e.jt).empty());
    CHECK(e.graph.has_value() == (variant == EulerVariant::relaxed));
    if (e.graph) CHECK(validate_problem(*e.graph).empty());
    auto dense = densify(e.jt);
    oracle::for_each_index(dense.axes, [&](const std::map<Label, std::size_t>& idx) {
      double want = 0.0;
      for (Label j = 1; j < 4; ++j) want += std::pow(x[idx.at(j)] - x[idx.at(j + 1)], 2);
      if (variant == EulerVariant::relaxed) want += std::pow(x[sigma[idx.at(1)]] - x[idx.at(4)], 2);
      CHECK(oracle::entry(dense.cost, idx) == doctest::Approx(want).epsilon(1e-12));
    });
    if (variant == EulerVariant::hard) {
      CHECK(e.jt.clamp_zero);
      const auto& pi = e.jt.marginals.at(e.jt.tree.constrained.back());
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k)
          CHECK(oracle::entry(pi, {{1, i}, {4, k}}) == (static_cast<int>(k) == sigma[i] ? 1.0 / 3.0 : 0.0));
    } else {
      // Two chain cliques plus the closing clique, four constrained separators.
      CHECK(e.graph->mjt.cost_cliques().size() == 3);
      CHECK(e.graph->marginals.size() == 4);
    }
  }
}

TEST_CASE("euler identity flow is cheaper than a reversal") {
  GridSpec g{4, 0, 1};
  auto run = [&](std::vector<int> sigma) {
    auto e = euler_problem(4, g, sigma, EulerVariant::hard, 0.02);
    IsbpSolver s(e.jt);
    IsbpOptions o;
    o.tol = 1e-6;
    auto r = s.solve(o);
    CHECK(r.converged);
    return s.cost();
  };
  double id = run({0, 1, 2, 3});
  double rev = run({3, 2, 1, 0});
  CHECK(id < 0.05);
  CHECK(rev > id + 0.1);
}

TEST_CASE("junction tree from a tree problem") {
  SplitMix64 rng(2);
  auto tp = oracle::random_tree(rng, {});
  auto jp = jt_from_tree(tp);
  CHECK(validate_problem(jp).empty());
  CHECK(jp.tree.cliques.size() == tp.graph.nodes.size() + tp.graph.edges.size());
  CHECK(jp.tree.constrained.size() == tp.graph.constrained.size());
  tp.marginals.begin()->second[0] = -1.0;
  CHECK_THROWS_AS(jt_from_tree(tp), ValidationError);
}
