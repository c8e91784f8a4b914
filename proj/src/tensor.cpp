// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mfq {

size_t element_count(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw std::invalid_argument("tensor data does not match its shape");
  }
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

double Tensor::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) {
    m = std::max(m, std::fabs(v));
  }
  return m;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

AxisLayout axis_layout(const Shape& shape, size_t axis) {
  if (axis >= shape.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(shape.size()));
  }
  AxisLayout layout;
  for (size_t i = 0; i < axis; ++i) {
    layout.outer *= shape[i];
  }
  layout.extent = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) {
    layout.inner *= shape[i];
  }
  return layout;
}

}  // namespace mfq
