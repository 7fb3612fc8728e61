#pragma once

// Builders for the standard problem families on 1-D grids.

#include <cstdint>
#include <optional>
#include <vector>

#include "graphot/graph_local.hpp"
#include "graphot/mot_global.hpp"
#include "graphot/tree_local.hpp"

namespace graphot {

struct GridSpec {
  std::size_t d = 10;
  double lo = 0.0;
  double hi = 1.0;

  /// d evenly spaced points from lo to hi; a single point sits at lo.
  std::vector<double> points() const;
};

struct MarginalGen {
  enum class Kind { lognormal, explicit_values };
  Kind kind = Kind::lognormal;
  std::uint64_t seed = 0;
  double location = 0.0;
  double scale = 1.0;
  std::vector<std::vector<double>> values;  // used by explicit_values
};

/// Log-normal mass of the grid cell around each point, with the location of
/// each marginal shifted by an independent U[-0.5, 0.5] draw, normalized.
std::vector<std::vector<double>> lognormal_marginals(const MarginalGen& gen, const GridSpec& grid,
                                                     std::size_t count);
/// Generated or explicit marginals (explicit ones are checked and copied).
std::vector<std::vector<double>> make_marginals(const MarginalGen& gen, const GridSpec& grid,
                                                std::size_t count);

Matrix squared_distance(const std::vector<double>& x, const std::vector<double>& y);

/// Junction tree with a singleton clique per node (labels are node ids) and
/// a pair clique per edge carrying its cost.
JtProblem jt_from_tree(const TreeProblem& p);

struct BarycenterInstance {
  TreeProblem tree;
  JtProblem jt;
};

/// Star with free center 0 and constrained leaves 1..n.
BarycenterInstance barycenter_problem(std::size_t n_leaves, const GridSpec& grid,
                                      const MarginalGen& gen, double epsilon);

enum class EulerVariant { hard, relaxed };

struct EulerInstance {
  JtProblem jt;
  /// Present for the relaxed variant only.
  std::optional<GraphLocalProblem> graph;
};

/// Time points are labeled 1..J. `sigma` is a 0-based permutation of the
/// grid indices.
EulerInstance euler_problem(std::size_t J, const GridSpec& grid, const std::vector<int>& sigma,
                            EulerVariant variant, double epsilon);

struct WlsInstance {
  GraphLocalProblem graph;
  JtProblem jt;
};

/// Variables 0 and J+1 are the free endpoints, 1..J the observed times.
WlsInstance wls_problem(std::size_t J, const std::vector<double>& times, const GridSpec& grid,
                        const MarginalGen& gen, double alpha, double epsilon);
/// Full cost of one index tuple (indices by variable label 0..J+1).
double wls_cost(const std::vector<double>& x, const std::vector<double>& times, double alpha);

struct SplineInstance {
  GraphLocalProblem graph;
  JtProblem jt;
};

/// Position x_j has label 2j and velocity v_j label 2j+1, for j = 0..J where
/// J + 1 = times.size().
SplineInstance spline_problem(const std::vector<double>& times, const GridSpec& grid_x,
                              const GridSpec& grid_v, const MarginalGen& gen, double epsilon);
/// Cost of one segment between times t0 < t1.
double spline_segment_cost(double x0, double v0, double x1, double v1, double t0, double t1);

inline Label spline_x(std::size_t j) { return static_cast<Label>(2 * j); }
inline Label spline_v(std::size_t j) { return static_cast<Label>(2 * j + 1); }

/// Evenly spaced times in [0, 1] (count >= 2), or {0} for a single time.
std::vector<double> uniform_times(std::size_t count);

}  // namespace graphot
