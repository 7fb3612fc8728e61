#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graphot/error.hpp"
#include "graphot/tensor.hpp"
#include "oracles.hpp"

using namespace graphot;

namespace {

LabeledTensor random_tensor(SplitMix64& rng, std::vector<Axis> axes, double lo = 0.0, double hi = 1.0) {
  std::size_t n = volume(axes);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return LabeledTensor(std::move(axes), std::move(v));
}

}  // namespace

TEST_CASE("tensor construction checks shape and labels") {
  CHECK_THROWS_AS(LabeledTensor({{1, 2}, {2, 2}}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(LabeledTensor({{1, 2}, {1, 2}}, {1, 2, 3, 4}), LabelError);
  LabeledTensor t({{4, 2}, {7, 3}}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at({1, 2}) == 5.0);
  CHECK(t.extent(7) == 3);
  CHECK_THROWS_AS(t.extent(5), LabelError);
}

TEST_CASE("project: uniform and outer-product marginals") {
  LabeledTensor u = LabeledTensor::filled({{1, 2}, {2, 2}}, 0.25);
  auto p = project(u, {1});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  auto o = outer({LabeledTensor::vector(1, {0.3, 0.7}), LabeledTensor::vector(2, {0.2, 0.8})});
  auto m = project(o, {1});
  CHECK(std::abs(m[0] - 0.3) <= 1e-14);
  CHECK(std::abs(m[1] - 0.7) <= 1e-14);
  CHECK_THROWS_AS(project(o, {9}), LabelError);
}

TEST_CASE("project matches exhaustive summation on a random 3x3x3 tensor") {
  SplitMix64 rng(11);
  auto t = random_tensor(rng, {{1, 3}, {2, 3}, {3, 3}});
  auto got = project(t, {1, 3});
  auto want = oracle::project(t, {1, 3});
  REQUIRE(got.axes() == want.axes());
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < 3; ++b) s += t.at({a, b, c});
      CHECK(got.at({a, c}) == doctest::Approx(s).epsilon(1e-14));
      CHECK(want.at({a, c}) == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("project preserves mass on larger tensors") {
  SplitMix64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<Axis> axes;
    std::size_t rank = 2 + rng.below(4);
    for (std::size_t i = 0; i < rank; ++i) axes.push_back({static_cast<Label>(i), 2 + rng.below(6)});
    auto t = random_tensor(rng, axes);
    double total = total_mass(t);
    auto p = project(t, {static_cast<Label>(rank - 1), 0});
    CHECK(std::abs(total_mass(p) - total) <= 1e-12 * total);
    // Axis order follows the input tensor, not the keep list.
    CHECK(p.axes().front().label == 0);
  }
}

TEST_CASE("log_project agrees with the log of project") {
  SplitMix64 rng(2);
  auto t = random_tensor(rng, {{3, 4}, {1, 2}, {8, 3}}, 0.1, 2.0);
  auto lp = log_project(log_of(t), std::vector<Label>{8});
  auto p = project(t, {8});
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::exp(lp[i]) == doctest::Approx(p[i]).epsilon(1e-13));
}

TEST_CASE("outer products") {
  auto one = outer({LabeledTensor::vector(1, {1}), LabeledTensor::vector(2, {1})});
  CHECK(one.size() == 1);
  CHECK(one[0] == 1.0);
  auto o = outer({LabeledTensor::vector(1, {0.5, 0.5}), LabeledTensor::vector(2, {0.2, 0.8})});
  CHECK(o.at({0, 0}) == doctest::Approx(0.1));
  CHECK(o.at({0, 1}) == doctest::Approx(0.4));
  CHECK(o.at({1, 0}) == doctest::Approx(0.1));
  CHECK(o.at({1, 1}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(outer({LabeledTensor::vector(1, {1, 2}), LabeledTensor::vector(1, {1, 2})}), LabelError);

  SplitMix64 rng(3);
  auto a = random_tensor(rng, {{0, 2}}), b = random_tensor(rng, {{1, 3}}), c = random_tensor(rng, {{2, 2}});
  auto abc = outer({a, b, c});
  REQUIRE(abc.size() == 12);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 2; ++k) CHECK(abc.at({i, j, k}) == doctest::Approx(a[i] * b[j] * c[k]));
}

TEST_CASE("broadcast_mul aligns by label") {
  SplitMix64 rng(4);
  auto t = random_tensor(rng, {{1, 2}, {2, 3}, {3, 2}});
  auto ones = LabeledTensor::filled({{3, 2}}, 1.0);
  auto same = broadcast_mul(t, ones);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(same[i] == t[i]);

  auto hand = broadcast_mul(LabeledTensor::filled({{1, 2}, {2, 2}}, 1.0), LabeledTensor::vector(1, {2, 3}));
  CHECK(hand.at({0, 0}) == 2.0);
  CHECK(hand.at({0, 1}) == 2.0);
  CHECK(hand.at({1, 0}) == 3.0);
  CHECK(hand.at({1, 1}) == 3.0);

  // s given with its axes in reverse order relative to t.
  auto s = random_tensor(rng, {{3, 2}, {2, 3}});
  auto r = broadcast_mul(t, s);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 2; ++k) CHECK(r.at({i, j, k}) == doctest::Approx(t.at({i, j, k}) * s.at({k, j})));

  CHECK_THROWS_AS(broadcast_mul(t, LabeledTensor::vector(9, {1, 2})), LabelError);
  CHECK_THROWS_AS(broadcast_mul(t, LabeledTensor::vector(2, {1, 2})), ShapeError);
}

TEST_CASE("expand and permute") {
  auto v = LabeledTensor::vector(2, {1, 2, 3});
  auto e = expand(v, {{1, 2}, {2, 3}});
  CHECK(e.at({1, 2}) == 3.0);
  auto m = LabeledTensor::matrix(1, 2, 2, 3, {0, 1, 2, 3, 4, 5});
  std::vector<Label> order{2, 1};
  auto pt = permute(m, order);
  CHECK(pt.at({2, 1}) == 5.0);
  CHECK(pt.at({1, 0}) == 1.0);
}

TEST_CASE("hadamard, division, inner and mass") {
  auto c = LabeledTensor::matrix(1, 2, 2, 2, {0, 1, 1, 0});
  auto b = LabeledTensor::matrix(1, 2, 2, 2, {0.5, 0, 0, 0.5});
  CHECK(inner(c, b) == 0.0);
  auto ones = LabeledTensor::filled({{1, 2}, {2, 2}}, 1.0);
  auto h = hadamard(b, ones);
  for (std::size_t i = 0; i < 4; ++i) CHECK(h[i] == b[i]);

  SplitMix64 rng(9);
  auto x = random_tensor(rng, {{1, 3}, {2, 3}}), y = random_tensor(rng, {{1, 3}, {2, 3}}, 0.5, 1.5);
  double want = 0.0;
  for (std::size_t i = 0; i < 9; ++i) want += x[i] * y[i];
  CHECK(inner(x, y) == doctest::Approx(want).epsilon(1e-14));
  auto q = elementwise_div(x, y);
  for (std::size_t i = 0; i < 9; ++i) CHECK(q[i] == doctest::Approx(x[i] / y[i]));
  CHECK(total_mass(b) == 1.0);

  auto z = y;
  z[4] = 0.0;
  try {
    elementwise_div(x, z);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("4") != std::string::npos);
  }
}

TEST_CASE("relative entropy") {
  auto m = LabeledTensor::matrix(1, 2, 2, 2, {0.1, 0.2, 0.3, 0.4});
  CHECK(rel_entropy(m, m) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(rel_entropy(LabeledTensor::filled({{1, 2}, {2, 2}}, 0.0), m) == 0.0);
  auto b = LabeledTensor::matrix(1, 2, 2, 2, {0.1, 0.2, 0.3, 0.4});
  auto ones = LabeledTensor::filled({{1, 2}, {2, 2}}, 1.0);
  double want = 0.0;
  for (double v : {0.1, 0.2, 0.3, 0.4}) want += v * std::log(v);
  CHECK(rel_entropy(b, ones) == doctest::Approx(want - 1.0).epsilon(1e-14));
  auto zero_m = LabeledTensor::matrix(1, 2, 2, 2, {0.0, 1, 1, 1});
  CHECK_THROWS_AS(rel_entropy(b, zero_m), NumericError);
}

TEST_CASE("geometric mean") {
  auto a = LabeledTensor::vector(1, {4, 1});
  auto g1 = geo_mean(std::vector<LabeledTensor>{a});
  CHECK(g1[0] == doctest::Approx(4.0));
  auto g = geo_mean(std::vector<LabeledTensor>{a, LabeledTensor::vector(1, {1, 4})});
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(2.0));

  SplitMix64 rng(8);
  std::vector<LabeledTensor> ts;
  for (int i = 0; i < 3; ++i) ts.push_back(random_tensor(rng, {{5, 4}}, 0.1, 3.0));
  auto gm = geo_mean(ts);
  std::vector<LabeledTensor> rev(ts.rbegin(), ts.rend());
  auto gr = geo_mean(rev);
  for (std::size_t i = 0; i < 4; ++i) {
    double want = std::exp((std::log(ts[0][i]) + std::log(ts[1][i]) + std::log(ts[2][i])) / 3.0);
    CHECK(gm[i] == doctest::Approx(want).epsilon(1e-13));
    CHECK(std::abs(gm[i] - gr[i]) <= 1e-13 * want);
  }
  CHECK_THROWS_AS(geo_mean(std::vector<LabeledTensor>{LabeledTensor::vector(1, {1, 0})}), NumericError);
}

TEST_CASE("log_sum_exp and capacity") {
  std::vector<double> v{1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  std::vector<double> ninf{-INFINITY, -INFINITY};
  CHECK(std::isinf(log_sum_exp(ninf)));
  std::vector<Axis> big{{0, 1 << 13}, {1, 1 << 13}};
  CHECK_THROWS_AS(volume(big, 1 << 20), CapacityError);
}
