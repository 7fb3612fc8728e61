#include "graphot/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "tensor_walk.hpp"

namespace graphot {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::label: return "label-error";
    case ErrorKind::shape: return "shape-error";
    case ErrorKind::numeric: return "numeric-error";
    case ErrorKind::contract: return "contract-error";
    case ErrorKind::validation: return "validation-error";
    case ErrorKind::assumption: return "assumption-violation";
    case ErrorKind::capacity: return "capacity-error";
    case ErrorKind::io: return "io-error";
    case ErrorKind::argument: return "argument-error";
  }
  return "error";
}

namespace {
std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> h = [](const std::string& m) {
    std::cerr << "warning: " << m << '\n';
  };
  return h;
}
}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
  warning_handler() = std::move(handler);
}

void warn(const std::string& message) {
  if (warning_handler()) warning_handler()(message);
}

namespace detail {

std::vector<std::size_t> row_major_strides(const std::vector<Axis>& axes) {
  std::vector<std::size_t> s(axes.size(), 1);
  for (std::size_t i = axes.size(); i-- > 1;) s[i - 1] = s[i] * axes[i].size;
  return s;
}

std::vector<std::size_t> aligned_strides(const std::vector<Axis>& over,
                                         const std::vector<Axis>& of) {
  auto own = row_major_strides(of);
  std::vector<std::size_t> out(over.size(), 0);
  for (std::size_t a = 0; a < of.size(); ++a) {
    bool found = false;
    for (std::size_t b = 0; b < over.size(); ++b) {
      if (over[b].label != of[a].label) continue;
      if (over[b].size != of[a].size) {
        std::ostringstream os;
        os << "size mismatch on label " << of[a].label << ": " << of[a].size
           << " vs " << over[b].size;
        throw ShapeError(os.str());
      }
      out[b] = own[a];
      found = true;
    }
    if (!found) {
      throw LabelError("label " + std::to_string(of[a].label) +
                       " not present in " + describe(over));
    }
  }
  return out;
}

Odometer::Odometer(const std::vector<Axis>& over,
                   std::vector<std::vector<std::size_t>> strides)
    : index_(over.size(), 0),
      strides_(std::move(strides)),
      offsets_(strides_.size(), 0) {
  sizes_.reserve(over.size());
  for (const auto& a : over) sizes_.push_back(a.size);
}

void Odometer::advance() {
  for (std::size_t ax = sizes_.size(); ax-- > 0;) {
    ++index_[ax];
    for (std::size_t k = 0; k < strides_.size(); ++k) offsets_[k] += strides_[k][ax];
    if (index_[ax] < sizes_[ax]) return;
    for (std::size_t k = 0; k < strides_.size(); ++k)
      offsets_[k] -= strides_[k][ax] * sizes_[ax];
    index_[ax] = 0;
  }
}

}  // namespace detail

using detail::aligned_strides;
using detail::Odometer;

std::size_t volume(std::span<const Axis> axes, std::size_t cap) {
  std::size_t v = 1;
  for (const auto& a : axes) {
    if (a.size == 0) throw ShapeError("axis " + std::to_string(a.label) + " has size 0");
    if (v > cap / a.size) {
      throw CapacityError("dense tensor over " +
                          describe(std::vector<Axis>(axes.begin(), axes.end())) +
                          " exceeds the configured cap of " + std::to_string(cap) +
                          " entries");
    }
    v *= a.size;
  }
  return v;
}

LabeledTensor::LabeledTensor() : values_(1, 0.0) {}

LabeledTensor::LabeledTensor(std::vector<Axis> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    for (std::size_t j = i + 1; j < axes_.size(); ++j)
      if (axes_[i].label == axes_[j].label)
        throw LabelError("duplicate axis label " + std::to_string(axes_[i].label));
  if (values_.size() != volume(axes_)) {
    throw ShapeError("tensor over " + describe(axes_) + " needs " +
                     std::to_string(volume(axes_)) + " values, got " +
                     std::to_string(values_.size()));
  }
}

LabeledTensor LabeledTensor::filled(std::vector<Axis> axes, double value) {
  std::size_t n = volume(axes);
  return LabeledTensor(std::move(axes), std::vector<double>(n, value));
}

LabeledTensor LabeledTensor::scalar(double value) {
  return LabeledTensor({}, std::vector<double>{value});
}

LabeledTensor LabeledTensor::vector(Label label, std::vector<double> values) {
  std::size_t n = values.size();
  return LabeledTensor({Axis{label, n}}, std::move(values));
}

LabeledTensor LabeledTensor::matrix(Label row_label, Label col_label,
                                    std::size_t rows, std::size_t cols,
                                    std::vector<double> values) {
  return LabeledTensor({Axis{row_label, rows}, Axis{col_label, cols}},
                       std::move(values));
}

std::vector<Label> LabeledTensor::labels() const {
  std::vector<Label> out;
  out.reserve(axes_.size());
  for (const auto& a : axes_) out.push_back(a.label);
  return out;
}

bool LabeledTensor::has_label(Label label) const noexcept {
  return axis_of(label).has_value();
}

std::optional<std::size_t> LabeledTensor::axis_of(Label label) const noexcept {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].label == label) return i;
  return std::nullopt;
}

std::size_t LabeledTensor::extent(Label label) const {
  auto ax = axis_of(label);
  if (!ax) throw LabelError("label " + std::to_string(label) + " not in " + describe(axes_));
  return axes_[*ax].size;
}

double LabeledTensor::at(std::initializer_list<std::size_t> index) const {
  return at(std::span<const std::size_t>(index.begin(), index.size()));
}

double LabeledTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != axes_.size())
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match tensor rank " + std::to_string(axes_.size()));
  std::size_t flat = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (index[i] >= axes_[i].size) throw ShapeError("index out of range");
    flat = flat * axes_[i].size + index[i];
  }
  return values_[flat];
}

namespace {

std::vector<Axis> kept_axes(const LabeledTensor& t, std::span<const Label> keep) {
  for (Label l : keep)
    if (!t.has_label(l))
      throw LabelError("cannot keep label " + std::to_string(l) + ": not in " +
                       describe(t.axes()));
  std::vector<Axis> out;
  for (const auto& a : t.axes())
    if (std::find(keep.begin(), keep.end(), a.label) != keep.end()) out.push_back(a);
  return out;
}

void require_same_labels(const LabeledTensor& a, const LabeledTensor& b) {
  if (a.rank() != b.rank())
    throw LabelError("label sets differ: " + describe(a.axes()) + " vs " + describe(b.axes()));
}

// Applies f(a_entry, b_entry) over a's layout with b aligned by label.
template <class F>
LabeledTensor zip(const LabeledTensor& a, const LabeledTensor& b, F f) {
  require_same_labels(a, b);
  std::vector<double> out(a.size());
  Odometer od(a.axes(), {aligned_strides(a.axes(), b.axes())});
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i, od.advance()) out[i] = f(av[i], bv[od.offset(0)], i);
  return LabeledTensor(a.axes(), std::move(out));
}

}  // namespace

LabeledTensor project(const LabeledTensor& t, std::span<const Label> keep) {
  auto axes = kept_axes(t, keep);
  std::vector<double> out(volume(axes), 0.0);
  Odometer od(t.axes(), {aligned_strides(t.axes(), axes)});
  auto tv = t.values();
  for (std::size_t i = 0; i < tv.size(); ++i, od.advance()) out[od.offset(0)] += tv[i];
  return LabeledTensor(std::move(axes), std::move(out));
}

LabeledTensor project(const LabeledTensor& t, std::initializer_list<Label> keep) {
  return project(t, std::span<const Label>(keep.begin(), keep.size()));
}

LabeledTensor log_project(const LabeledTensor& log_t, std::span<const Label> keep) {
  auto axes = kept_axes(log_t, keep);
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> mx(volume(axes), ninf);
  auto tv = log_t.values();
  auto strides = aligned_strides(log_t.axes(), axes);
  {
    Odometer od(log_t.axes(), {strides});
    for (std::size_t i = 0; i < tv.size(); ++i, od.advance())
      mx[od.offset(0)] = std::max(mx[od.offset(0)], tv[i]);
  }
  std::vector<double> sum(mx.size(), 0.0);
  {
    Odometer od(log_t.axes(), {strides});
    for (std::size_t i = 0; i < tv.size(); ++i, od.advance()) {
      double m = mx[od.offset(0)];
      if (m != ninf) sum[od.offset(0)] += std::exp(tv[i] - m);
    }
  }
  for (std::size_t i = 0; i < mx.size(); ++i)
    mx[i] = mx[i] == ninf ? ninf : mx[i] + std::log(sum[i]);
  return LabeledTensor(std::move(axes), std::move(mx));
}

LabeledTensor outer(std::span<const LabeledTensor> factors) {
  std::vector<Axis> axes;
  for (const auto& f : factors)
    for (const auto& a : f.axes()) {
      for (const auto& b : axes)
        if (b.label == a.label)
          throw LabelError("outer: label " + std::to_string(a.label) +
                           " appears in more than one factor");
      axes.push_back(a);
    }
  std::vector<std::vector<std::size_t>> strides;
  for (const auto& f : factors) strides.push_back(aligned_strides(axes, f.axes()));
  std::vector<double> out(volume(axes));
  Odometer od(axes, strides);
  for (std::size_t i = 0; i < out.size(); ++i, od.advance()) {
    double v = 1.0;
    for (std::size_t k = 0; k < factors.size(); ++k) v *= factors[k].values()[od.offset(k)];
    out[i] = v;
  }
  return LabeledTensor(std::move(axes), std::move(out));
}

LabeledTensor outer(std::initializer_list<LabeledTensor> factors) {
  return outer(std::span<const LabeledTensor>(factors.begin(), factors.size()));
}

LabeledTensor broadcast_mul(const LabeledTensor& t, const LabeledTensor& s) {
  std::vector<double> out(t.size());
  Odometer od(t.axes(), {aligned_strides(t.axes(), s.axes())});
  auto tv = t.values();
  auto sv = s.values();
  for (std::size_t i = 0; i < out.size(); ++i, od.advance()) out[i] = tv[i] * sv[od.offset(0)];
  return LabeledTensor(t.axes(), std::move(out));
}

LabeledTensor broadcast_add(const LabeledTensor& t, const LabeledTensor& s) {
  std::vector<double> out(t.size());
  Odometer od(t.axes(), {aligned_strides(t.axes(), s.axes())});
  auto tv = t.values();
  auto sv = s.values();
  for (std::size_t i = 0; i < out.size(); ++i, od.advance()) out[i] = tv[i] + sv[od.offset(0)];
  return LabeledTensor(t.axes(), std::move(out));
}

LabeledTensor expand(const LabeledTensor& s, const std::vector<Axis>& axes) {
  std::vector<double> out(volume(axes));
  Odometer od(axes, {aligned_strides(axes, s.axes())});
  auto sv = s.values();
  for (std::size_t i = 0; i < out.size(); ++i, od.advance()) out[i] = sv[od.offset(0)];
  return LabeledTensor(axes, std::move(out));
}

LabeledTensor permute(const LabeledTensor& t, std::span<const Label> order) {
  if (order.size() != t.rank())
    throw LabelError("permute: order has " + std::to_string(order.size()) +
                     " labels, tensor has rank " + std::to_string(t.rank()));
  std::vector<Axis> axes;
  for (Label l : order) axes.push_back(Axis{l, t.extent(l)});
  return expand(t, axes);
}

LabeledTensor hadamard(const LabeledTensor& a, const LabeledTensor& b) {
  return zip(a, b, [](double x, double y, std::size_t) { return x * y; });
}

LabeledTensor elementwise_div(const LabeledTensor& a, const LabeledTensor& b) {
  return zip(a, b, [&](double x, double y, std::size_t i) {
    if (y == 0.0) {
      std::ostringstream os;
      os << "division by zero at flat index " << i << " of " << describe(a.axes());
      throw NumericError(os.str());
    }
    return x / y;
  });
}

double inner(const LabeledTensor& a, const LabeledTensor& b) {
  require_same_labels(a, b);
  Odometer od(a.axes(), {aligned_strides(a.axes(), b.axes())});
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i, od.advance()) s += av[i] * bv[od.offset(0)];
  return s;
}

double total_mass(const LabeledTensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double l1_distance(const LabeledTensor& a, const LabeledTensor& b) {
  require_same_labels(a, b);
  Odometer od(a.axes(), {aligned_strides(a.axes(), b.axes())});
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i, od.advance()) s += std::abs(av[i] - bv[od.offset(0)]);
  return s;
}

double rel_entropy(const LabeledTensor& b, const LabeledTensor& m) {
  require_same_labels(b, m);
  Odometer od(b.axes(), {aligned_strides(b.axes(), m.axes())});
  double s = 0.0;
  auto bv = b.values();
  auto mv = m.values();
  for (std::size_t i = 0; i < bv.size(); ++i, od.advance()) {
    double x = bv[i];
    double y = mv[od.offset(0)];
    if (x < 0.0) throw NumericError("rel_entropy: negative entry at flat index " + std::to_string(i));
    if (x == 0.0) continue;
    if (y <= 0.0)
      throw NumericError("rel_entropy: positive mass where reference is zero at flat index " +
                         std::to_string(i));
    s += x * (std::log(x) - std::log(y) - 1.0);
  }
  return s;
}

LabeledTensor geo_mean(std::span<const LabeledTensor> ts) {
  if (ts.empty()) throw ShapeError("geo_mean of an empty list");
  const auto& first = ts.front();
  std::vector<double> acc(first.size(), 0.0);
  for (const auto& t : ts) {
    require_same_labels(first, t);
    Odometer od(first.axes(), {aligned_strides(first.axes(), t.axes())});
    auto tv = t.values();
    for (std::size_t i = 0; i < acc.size(); ++i, od.advance()) {
      double v = tv[od.offset(0)];
      if (!(v > 0.0))
        throw NumericError("geo_mean: nonpositive entry at flat index " + std::to_string(i));
      acc[i] += std::log(v);
    }
  }
  double n = static_cast<double>(ts.size());
  for (double& v : acc) v = std::exp(v / n);
  return LabeledTensor(first.axes(), std::move(acc));
}

LabeledTensor map(const LabeledTensor& t, const std::function<double(double)>& f) {
  std::vector<double> out(t.values().begin(), t.values().end());
  for (double& v : out) v = f(v);
  return LabeledTensor(t.axes(), std::move(out));
}

LabeledTensor log_of(const LabeledTensor& t) {
  return map(t, [](double v) { return std::log(v); });
}

LabeledTensor exp_of(const LabeledTensor& t) {
  return map(t, [](double v) { return std::exp(v); });
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::string describe(const std::vector<Axis>& axes) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) os << ", ";
    os << axes[i].label << ':' << axes[i].size;
  }
  os << ']';
  return os.str();
}

}  // namespace graphot
