#include "graphot/problems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "graphot/random.hpp"

namespace graphot {

std::vector<double> GridSpec::points() const {
  if (d == 0) throw ArgumentError("grid needs at least one point");
  if (!(lo < hi)) throw ArgumentError("grid interval must satisfy lo < hi");
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i)
    x[i] = d == 1 ? lo : lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(d - 1);
  return x;
}

namespace {

double lognormal_cdf(double x, double location, double scale) {
  if (x <= 0.0) return 0.0;
  return 0.5 * std::erfc(-(std::log(x) - location) / (scale * std::sqrt(2.0)));
}

void normalize(std::vector<double>& v) {
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
}

LabeledTensor matrix_tensor(Label a, Label b, const Matrix& m) {
  return LabeledTensor::matrix(a, b, m.rows, m.cols, m.a);
}

std::vector<Axis> uniform_axes(const std::vector<Label>& labels, std::size_t d) {
  std::vector<Axis> ax;
  for (Label l : labels) ax.push_back(Axis{l, d});
  return ax;
}

}  // namespace

std::vector<std::vector<double>> lognormal_marginals(const MarginalGen& gen, const GridSpec& grid,
                                                     std::size_t count) {
  if (count == 0) throw ArgumentError("lognormal_marginals: count must be positive");
  if (!(gen.scale > 0.0)) throw ArgumentError("lognormal scale must be positive");
  auto x = grid.points();
  std::size_t d = x.size();
  SplitMix64 rng(gen.seed);
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    double loc = gen.location + rng.uniform(-0.5, 0.5);
    std::vector<double> m(d, 1.0);
    if (d > 1) {
      double h = x[1] - x[0];
      for (std::size_t i = 0; i < d; ++i) {
        double a = x[i] - 0.5 * h;
        double b = x[i] + 0.5 * h;
        m[i] = std::max(lognormal_cdf(b, loc, gen.scale) - lognormal_cdf(a, loc, gen.scale), 1e-300);
      }
    }
    normalize(m);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::vector<double>> make_marginals(const MarginalGen& gen, const GridSpec& grid,
                                                std::size_t count) {
  if (gen.kind == MarginalGen::Kind::lognormal) return lognormal_marginals(gen, grid, count);
  if (gen.values.size() != count)
    throw ArgumentError("expected " + std::to_string(count) + " explicit marginals, got " +
                        std::to_string(gen.values.size()));
  for (const auto& v : gen.values)
    if (v.size() != grid.d)
      throw ArgumentError("explicit marginal has " + std::to_string(v.size()) +
                          " entries, grid has " + std::to_string(grid.d));
  return gen.values;
}

Matrix squared_distance(const std::vector<double>& x, const std::vector<double>& y) {
  Matrix c(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) c(i, j) = (x[i] - y[j]) * (x[i] - y[j]);
  return c;
}

std::vector<double> uniform_times(std::size_t count) {
  if (count == 0) throw ArgumentError("uniform_times: count must be positive");
  std::vector<double> t(count, 0.0);
  for (std::size_t i = 1; i < count; ++i)
    t[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  return t;
}

JtProblem jt_from_tree(const TreeProblem& p) {
  auto v = validate_problem(p);
  if (!v.empty()) throw ValidationError(format_violations(v));
  JtProblem jp;
  std::map<NodeId, int> single;
  for (NodeId j : p.graph.nodes) {
    jp.axes.push_back(Axis{j, p.sizes.at(j)});
    single[j] = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back({j});
    jp.costs.push_back(std::nullopt);
    if (p.graph.is_constrained(j)) {
      jp.tree.constrained.push_back(single[j]);
      jp.marginals[single[j]] = LabeledTensor::vector(j, p.marginals.at(j));
    }
  }
  std::sort(jp.axes.begin(), jp.axes.end(), [](const Axis& a, const Axis& b) { return a.label < b.label; });
  for (std::size_t e = 0; e < p.graph.edges.size(); ++e) {
    auto [j, k] = p.graph.edges[e];
    int pair = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back(make_varset({j, k}));
    jp.costs.push_back(matrix_tensor(j, k, p.costs[e]));
    jp.tree.edges.push_back({single[j], pair});
    jp.tree.edges.push_back({pair, single[k]});
  }
  jp.epsilon = p.epsilon;
  return jp;
}

BarycenterInstance barycenter_problem(std::size_t n_leaves, const GridSpec& grid,
                                      const MarginalGen& gen, double epsilon) {
  if (n_leaves < 2) throw ArgumentError("barycenter needs at least two leaves");
  auto x = grid.points();
  auto mus = make_marginals(gen, grid, n_leaves);
  Matrix c = squared_distance(x, x);
  BarycenterInstance inst;
  TreeProblem& tp = inst.tree;
  tp.graph.nodes.push_back(0);
  tp.sizes[0] = grid.d;
  for (std::size_t k = 1; k <= n_leaves; ++k) {
    NodeId j = static_cast<NodeId>(k);
    tp.graph.nodes.push_back(j);
    tp.graph.edges.push_back({0, j});
    tp.graph.constrained.push_back(j);
    tp.sizes[j] = grid.d;
    tp.costs.push_back(c);
    tp.marginals[j] = mus[k - 1];
  }
  tp.epsilon = epsilon;

  inst.jt = jt_from_tree(tp);
  return inst;
}

EulerInstance euler_problem(std::size_t J, const GridSpec& grid, const std::vector<int>& sigma,
                            EulerVariant variant, double epsilon) {
  if (J < 3) throw ArgumentError("euler problem needs J >= 3");
  std::size_t d = grid.d;
  if (sigma.size() != d) throw ValidationError("permutation length must equal the grid size");
  std::vector<int> check = sigma;
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < d; ++i)
    if (check[i] != static_cast<int>(i))
      throw ValidationError("sigma is not a permutation of 0.." + std::to_string(d - 1));
  auto x = grid.points();
  Matrix c = squared_distance(x, x);
  Matrix cs(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t l = 0; l < d; ++l) cs(i, l) = (x[sigma[i]] - x[l]) * (x[sigma[i]] - x[l]);
  std::vector<double> uniform(d, 1.0 / static_cast<double>(d));
  Label last = static_cast<Label>(J);
  std::vector<Label> labels(J);
  std::iota(labels.begin(), labels.end(), 1);

  EulerInstance inst;
  JtProblem& jp = inst.jt;
  jp.axes = uniform_axes(labels, d);
  jp.epsilon = epsilon;
  // Chain of cliques {1, j, j+1} for j = 2..J-1.
  std::vector<int> chain;
  std::vector<LabeledTensor> chain_cost;
  for (Label j = 2; j <= last - 1; ++j) {
    int id = static_cast<int>(jp.tree.cliques.size());
    VarSet cl = make_varset({1, j, j + 1});
    std::vector<Axis> ax = axes_for(cl, jp.axes);
    LabeledTensor cost = expand(matrix_tensor(j, j + 1, c), ax);
    if (j == 2) cost = broadcast_add(cost, matrix_tensor(1, 2, c));
    chain_cost.push_back(cost);
    if (variant == EulerVariant::relaxed && j == last - 1)
      cost = broadcast_add(cost, matrix_tensor(1, last, cs));
    jp.tree.cliques.push_back(cl);
    jp.costs.push_back(cost);
    if (!chain.empty()) jp.tree.edges.push_back({chain.back(), id});
    chain.push_back(id);
  }
  auto add_leaf = [&](int parent, VarSet vars, LabeledTensor mu) {
    int id = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back(std::move(vars));
    jp.costs.push_back(std::nullopt);
    jp.tree.edges.push_back({parent, id});
    jp.tree.constrained.push_back(id);
    jp.marginals[id] = std::move(mu);
  };
  for (Label j = 2; j <= last - 1; ++j)
    add_leaf(chain[j - 2], {j}, LabeledTensor::vector(j, uniform));
  if (variant == EulerVariant::hard) {
    Matrix pi(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) pi(i, sigma[i]) = 1.0 / static_cast<double>(d);
    add_leaf(chain.back(), {1, last}, matrix_tensor(1, last, pi));
    jp.clamp_zero = true;
    return inst;
  }
  add_leaf(chain.front(), {1}, LabeledTensor::vector(1, uniform));
  add_leaf(chain.back(), {last}, LabeledTensor::vector(last, uniform));

  GraphLocalProblem g;
  g.axes = jp.axes;
  g.epsilon = epsilon;
  auto& nodes = g.mjt.nodes;
  auto add_node = [&](VarSet vars, bool sep, std::optional<VarSet> gamma) {
    nodes.push_back({std::move(vars), sep, std::move(gamma)});
    return static_cast<int>(nodes.size()) - 1;
  };
  int prev = add_node({2}, true, VarSet{2});
  g.marginals[prev] = LabeledTensor::vector(2, uniform);
  for (std::size_t k = 0; k < chain.size(); ++k) {
    Label j = static_cast<Label>(k) + 2;
    int cl = add_node(jp.tree.cliques[chain[k]], false, std::nullopt);
    g.costs[cl] = chain_cost[k];
    g.mjt.edges.push_back({prev, cl});
    int sep = add_node(make_varset({1, j + 1}), true, VarSet{j + 1});
    g.marginals[sep] = LabeledTensor::vector(j + 1, uniform);
    g.mjt.edges.push_back({cl, sep});
    prev = sep;
  }
  int tail = add_node(make_varset({1, last}), false, std::nullopt);
  g.costs[tail] = matrix_tensor(1, last, cs);
  g.mjt.edges.push_back({prev, tail});
  int first = add_node({1}, true, VarSet{1});
  g.marginals[first] = LabeledTensor::vector(1, uniform);
  g.mjt.edges.push_back({tail, first});
  inst.graph = std::move(g);
  return inst;
}

double wls_cost(const std::vector<double>& x, const std::vector<double>& times, double alpha) {
  std::size_t J = times.size();
  double s = alpha * (x[0] - x[J + 1]) * (x[0] - x[J + 1]);
  for (std::size_t j = 1; j <= J; ++j) {
    double t = times[j - 1];
    double r = x[j] - (1.0 - t) * x[0] - t * x[J + 1];
    s += r * r;
  }
  return s;
}

WlsInstance wls_problem(std::size_t J, const std::vector<double>& times, const GridSpec& grid,
                        const MarginalGen& gen, double alpha, double epsilon) {
  if (J < 1) throw ArgumentError("wls problem needs J >= 1");
  if (times.size() != J) throw ValidationError("wls problem needs one time per observation");
  for (std::size_t j = 0; j < J; ++j) {
    if (times[j] < 0.0 || times[j] > 1.0) throw ValidationError("wls times must lie in [0, 1]");
    if (j > 0 && !(times[j] > times[j - 1]))
      throw ValidationError("wls times must be strictly increasing");
  }
  if (!(alpha > 0.0)) throw ValidationError("wls penalty alpha must be positive");
  auto x = grid.points();
  std::size_t d = x.size();
  auto mus = make_marginals(gen, grid, J);
  Label end = static_cast<Label>(J + 1);
  std::vector<Label> labels(J + 2);
  std::iota(labels.begin(), labels.end(), 0);
  std::vector<Axis> axes = uniform_axes(labels, d);

  auto clique_cost = [&](std::size_t j) {
    VarSet cl = make_varset({0, static_cast<Label>(j), end});
    auto ax = axes_for(cl, axes);
    // Axis order is (0, j, J+1) since 0 < j < J+1.
    std::vector<double> v(d * d * d);
    double t = times[j - 1];
    double share = alpha / static_cast<double>(J);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        for (std::size_t c = 0; c < d; ++c) {
          double r = x[b] - (1.0 - t) * x[a] - t * x[c];
          v[(a * d + b) * d + c] = r * r + share * (x[a] - x[c]) * (x[a] - x[c]);
        }
    return LabeledTensor(ax, std::move(v));
  };

  WlsInstance inst;
  GraphLocalProblem& g = inst.graph;
  g.axes = axes;
  g.epsilon = epsilon;
  g.mjt.nodes.push_back({{0, end}, true, std::nullopt});
  for (std::size_t j = 1; j <= J; ++j) {
    Label lj = static_cast<Label>(j);
    int cl = static_cast<int>(g.mjt.nodes.size());
    g.mjt.nodes.push_back({make_varset({0, lj, end}), false, std::nullopt});
    g.costs[cl] = clique_cost(j);
    g.mjt.edges.push_back({0, cl});
    int sep = static_cast<int>(g.mjt.nodes.size());
    g.mjt.nodes.push_back({{lj}, true, VarSet{lj}});
    g.marginals[sep] = LabeledTensor::vector(lj, mus[j - 1]);
    g.mjt.edges.push_back({cl, sep});
  }

  JtProblem& jp = inst.jt;
  jp.axes = axes;
  jp.epsilon = epsilon;
  int prev = -1;
  for (std::size_t j = 1; j <= J; ++j) {
    Label lj = static_cast<Label>(j);
    int cl = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back(make_varset({0, lj, end}));
    jp.costs.push_back(clique_cost(j));
    if (prev >= 0) jp.tree.edges.push_back({prev, cl});
    prev = cl;
    int leaf = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back({lj});
    jp.costs.push_back(std::nullopt);
    jp.tree.edges.push_back({cl, leaf});
    jp.tree.constrained.push_back(leaf);
    jp.marginals[leaf] = LabeledTensor::vector(lj, mus[j - 1]);
  }
  return inst;
}

double spline_segment_cost(double x0, double v0, double x1, double v1, double t0, double t1) {
  double h = t1 - t0;
  double r = (x1 - x0) / h - v0;
  double dv = v1 - v0;
  return (12.0 * r * r - 12.0 * r * dv + 4.0 * dv * dv) / h;
}

SplineInstance spline_problem(const std::vector<double>& times, const GridSpec& grid_x,
                              const GridSpec& grid_v, const MarginalGen& gen, double epsilon) {
  if (times.size() < 2) throw ArgumentError("spline problem needs at least two times");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw ValidationError("spline times must be strictly increasing");
  std::size_t J = times.size() - 1;
  auto xs = grid_x.points();
  auto vs = grid_v.points();
  auto mus = make_marginals(gen, grid_x, J + 1);
  std::vector<Axis> axes;
  for (std::size_t j = 0; j <= J; ++j) {
    axes.push_back(Axis{spline_x(j), xs.size()});
    axes.push_back(Axis{spline_v(j), vs.size()});
  }
  auto clique_vars = [&](std::size_t j) {
    return make_varset({spline_x(j), spline_v(j), spline_x(j + 1), spline_v(j + 1)});
  };
  auto clique_cost = [&](std::size_t j) {
    // Sorted labels give axis order (x_j, v_j, x_{j+1}, v_{j+1}).
    auto ax = axes_for(clique_vars(j), axes);
    std::size_t nx = xs.size(), nv = vs.size();
    std::vector<double> v(nx * nv * nx * nv);
    std::size_t f = 0;
    for (std::size_t a = 0; a < nx; ++a)
      for (std::size_t b = 0; b < nv; ++b)
        for (std::size_t c = 0; c < nx; ++c)
          for (std::size_t e = 0; e < nv; ++e)
            v[f++] = spline_segment_cost(xs[a], vs[b], xs[c], vs[e], times[j], times[j + 1]);
    return LabeledTensor(ax, std::move(v));
  };

  SplineInstance inst;
  GraphLocalProblem& g = inst.graph;
  g.axes = axes;
  g.epsilon = epsilon;
  auto& nodes = g.mjt.nodes;
  nodes.push_back({{spline_x(0)}, true, VarSet{spline_x(0)}});
  g.marginals[0] = LabeledTensor::vector(spline_x(0), mus[0]);
  int prev = 0;
  for (std::size_t j = 0; j < J; ++j) {
    int cl = static_cast<int>(nodes.size());
    nodes.push_back({clique_vars(j), false, std::nullopt});
    g.costs[cl] = clique_cost(j);
    g.mjt.edges.push_back({prev, cl});
    int sep = static_cast<int>(nodes.size());
    if (j + 1 < J)
      nodes.push_back({make_varset({spline_x(j + 1), spline_v(j + 1)}), true, VarSet{spline_x(j + 1)}});
    else
      nodes.push_back({{spline_x(J)}, true, VarSet{spline_x(J)}});
    g.marginals[sep] = LabeledTensor::vector(spline_x(j + 1), mus[j + 1]);
    g.mjt.edges.push_back({cl, sep});
    prev = sep;
  }

  JtProblem& jp = inst.jt;
  jp.axes = axes;
  jp.epsilon = epsilon;
  std::vector<int> chain;
  for (std::size_t j = 0; j < J; ++j) {
    int cl = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back(clique_vars(j));
    jp.costs.push_back(clique_cost(j));
    if (!chain.empty()) jp.tree.edges.push_back({chain.back(), cl});
    chain.push_back(cl);
  }
  for (std::size_t j = 0; j <= J; ++j) {
    int parent = chain[std::min(j, J - 1)];
    int leaf = static_cast<int>(jp.tree.cliques.size());
    jp.tree.cliques.push_back({spline_x(j)});
    jp.costs.push_back(std::nullopt);
    jp.tree.edges.push_back({parent, leaf});
    jp.tree.constrained.push_back(leaf);
    jp.marginals[leaf] = LabeledTensor::vector(spline_x(j), mus[j]);
  }
  return inst;
}

}  // namespace graphot
