#pragma once

#include <cstddef>
#include <vector>

namespace graphot {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), a(std::move(values)) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
  std::vector<double> row_sums() const {
    std::vector<double> s(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) s[i] += (*this)(i, j);
    return s;
  }
  std::vector<double> col_sums() const {
    std::vector<double> s(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) s[j] += (*this)(i, j);
    return s;
  }
  double sum() const {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = v < 0 ? (-v > m ? -v : m) : (v > m ? v : m);
    return m;
  }
};

inline double frobenius_inner(const Matrix& x, const Matrix& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) s += x.a[i] * y.a[i];
  return s;
}

}  // namespace graphot
