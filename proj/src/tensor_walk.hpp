#pragma once

#include <cstddef>
#include <vector>

#include "graphot/tensor.hpp"

namespace graphot::detail {

std::vector<std::size_t> row_major_strides(const std::vector<Axis>& axes);

// Stride of `of` along each axis of `over`, 0 where `of` lacks the label.
// Throws LabelError when `of` has a label missing from `over` and
// ShapeError on a size mismatch.
std::vector<std::size_t> aligned_strides(const std::vector<Axis>& over,
                                         const std::vector<Axis>& of);

// Row-major walk over `over` that tracks flat offsets into several tensors.
class Odometer {
 public:
  Odometer(const std::vector<Axis>& over,
           std::vector<std::vector<std::size_t>> strides);

  std::size_t offset(std::size_t k) const { return offsets_[k]; }
  void advance();

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> index_;
  std::vector<std::vector<std::size_t>> strides_;
  std::vector<std::size_t> offsets_;
};

}  // namespace graphot::detail
