// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfq {

using Shape = std::vector<size_t>;

size_t element_count(const Shape& shape) noexcept;

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  size_t rank() const noexcept { return shape_.size(); }
  size_t dim(size_t axis) const { return shape_.at(axis); }
  size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  double& operator[](size_t i) noexcept { return data_[i]; }
  double operator[](size_t i) const noexcept { return data_[i]; }

  /// Same data, new shape with the same element count.
  Tensor reshaped(Shape shape) const;

  double max_abs() const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Number of slices along `axis` and the contiguous run length after it.
struct AxisLayout {
  size_t outer = 1;
  size_t extent = 1;
  size_t inner = 1;
};

AxisLayout axis_layout(const Shape& shape, size_t axis);

}  // namespace mfq
