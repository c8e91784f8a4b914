// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Column-greedy quantization with inverse-Hessian error compensation, lazy
// block updates, and per-group Hessians for convolutions.

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mfq/formats.hpp"

namespace mfq {

class HessianAccumulator {
 public:
  explicit HessianAccumulator(size_t dim);

  /// Adds 2 x x^T for every column x of `columns` (d x n).
  void add(const Eigen::MatrixXd& columns);

  const Eigen::MatrixXd& hessian() const noexcept { return h_; }
  size_t dim() const noexcept { return static_cast<size_t>(h_.rows()); }
  size_t count() const noexcept { return count_; }

 private:
  Eigen::MatrixXd h_;
  size_t count_ = 0;
};

/// H + lambda * mean(diag H) * I. An all-zero H becomes the identity.
Eigen::MatrixXd damp_hessian(const Eigen::MatrixXd& h, double lambda);

/// Rounds weight `w` of row `row` onto the target grid.
using ColumnQuantizer = std::function<double(double w, size_t row)>;

/// Quantizes W [rows, d] column by column, left to right. `h` must already
/// be damped. Throws std::runtime_error when the Cholesky factorization
/// fails, naming the smallest eigenvalue.
Eigen::MatrixXd gptq_quantize_layer(const Eigen::MatrixXd& w, const Eigen::MatrixXd& h,
                                    const ColumnQuantizer& quantize, size_t block_size);

/// Same, rounding each row with its own outer scale.
Eigen::MatrixXd gptq_quantize_layer(const Eigen::MatrixXd& w, const Eigen::MatrixXd& h,
                                    const NumericFormat& format, const std::vector<double>& row_scale,
                                    size_t block_size);

}  // namespace mfq
