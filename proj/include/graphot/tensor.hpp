#pragma once

// Dense labeled tensors. Axes carry variable labels and every binary
// operation aligns operands by label, never by position.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphot/error.hpp"

namespace graphot {

using Label = int;

struct Axis {
  Label label = 0;
  std::size_t size = 1;

  friend bool operator==(const Axis&, const Axis&) = default;
};

/// Product of axis sizes. Throws CapacityError if the product exceeds `cap`.
std::size_t volume(std::span<const Axis> axes,
                   std::size_t cap = static_cast<std::size_t>(-1));

/// Upper bound on materialized full joint tensors (oracle and global paths).
inline constexpr std::size_t kDefaultDenseCap = std::size_t{1} << 24;

class LabeledTensor {
 public:
  /// Rank-0 tensor holding 0.
  LabeledTensor();
  LabeledTensor(std::vector<Axis> axes, std::vector<double> values);

  static LabeledTensor filled(std::vector<Axis> axes, double value);
  static LabeledTensor scalar(double value);
  static LabeledTensor vector(Label label, std::vector<double> values);
  /// Row-major matrix over (row_label, col_label).
  static LabeledTensor matrix(Label row_label, Label col_label,
                              std::size_t rows, std::size_t cols,
                              std::vector<double> values);

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::size_t rank() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  std::vector<Label> labels() const;
  bool has_label(Label label) const noexcept;
  std::optional<std::size_t> axis_of(Label label) const noexcept;
  /// Size of the axis carrying `label`; LabelError if absent.
  std::size_t extent(Label label) const;

  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }
  /// Entry at a multi-index given in this tensor's axis order.
  double at(std::initializer_list<std::size_t> index) const;
  double at(std::span<const std::size_t> index) const;

 private:
  std::vector<Axis> axes_;
  std::vector<double> values_;
};

/// Sums out every axis not in `keep`; the result keeps t's axis order.
LabeledTensor project(const LabeledTensor& t, std::span<const Label> keep);
LabeledTensor project(const LabeledTensor& t, std::initializer_list<Label> keep);
/// Same as project for tensors holding logarithms: log-sum-exp over dropped
/// axes with max shifting.
LabeledTensor log_project(const LabeledTensor& log_t, std::span<const Label> keep);

LabeledTensor outer(std::span<const LabeledTensor> factors);
LabeledTensor outer(std::initializer_list<LabeledTensor> factors);

/// Multiplies each entry of t by the entry of s at the matching labels.
LabeledTensor broadcast_mul(const LabeledTensor& t, const LabeledTensor& s);
/// Additive counterpart used for log-domain tensors.
LabeledTensor broadcast_add(const LabeledTensor& t, const LabeledTensor& s);
/// Replicates s over `axes` (labels of s must be a subset).
LabeledTensor expand(const LabeledTensor& s, const std::vector<Axis>& axes);
/// Reorders axes to `order` (a permutation of t's labels).
LabeledTensor permute(const LabeledTensor& t, std::span<const Label> order);

LabeledTensor hadamard(const LabeledTensor& a, const LabeledTensor& b);
LabeledTensor elementwise_div(const LabeledTensor& a, const LabeledTensor& b);
double inner(const LabeledTensor& a, const LabeledTensor& b);
double total_mass(const LabeledTensor& a);
/// Sum of |a - b| after label alignment.
double l1_distance(const LabeledTensor& a, const LabeledTensor& b);

/// sum b (log b - log m - 1), with 0 log 0 = 0.
double rel_entropy(const LabeledTensor& b, const LabeledTensor& m);

/// Elementwise geometric mean of tensors sharing a labeled shape.
LabeledTensor geo_mean(std::span<const LabeledTensor> ts);

LabeledTensor map(const LabeledTensor& t, const std::function<double(double)>& f);
LabeledTensor log_of(const LabeledTensor& t);
LabeledTensor exp_of(const LabeledTensor& t);

/// Log-sum-exp of all entries; -inf for an all -inf tensor.
double log_sum_exp(std::span<const double> v);

std::string describe(const std::vector<Axis>& axes);

}  // namespace graphot
