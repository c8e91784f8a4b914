// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/gptq.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "mfq/quantizers.hpp"

namespace mfq {

HessianAccumulator::HessianAccumulator(size_t dim)
    : h_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

void HessianAccumulator::add(const Eigen::MatrixXd& columns) {
  if (columns.rows() != h_.rows()) {
    throw std::invalid_argument("Hessian rows have width " + std::to_string(columns.rows()) + ", expected " +
                                std::to_string(h_.rows()));
  }
  h_.selfadjointView<Eigen::Lower>().rankUpdate(columns, 2.0);
  h_.triangularView<Eigen::StrictlyUpper>() = h_.transpose();
  count_ += static_cast<size_t>(columns.cols());
}

Eigen::MatrixXd damp_hessian(const Eigen::MatrixXd& h, double lambda) {
  const Eigen::Index d = h.rows();
  const double mean = d ? h.diagonal().mean() : 0.0;
  if (!(mean > 0.0)) {
    return Eigen::MatrixXd::Identity(d, d);
  }
  Eigen::MatrixXd out = h;
  out.diagonal().array() += lambda * mean;
  return out;
}

Eigen::MatrixXd gptq_quantize_layer(const Eigen::MatrixXd& w_in, const Eigen::MatrixXd& h,
                                    const ColumnQuantizer& quantize, size_t block_size) {
  const Eigen::Index d = w_in.cols();
  if (h.rows() != d || h.cols() != d) {
    throw std::invalid_argument("Hessian does not match the weight fan-in");
  }
  if (block_size == 0) {
    throw std::invalid_argument("block size must be positive");
  }
  // Upper Cholesky factor U of H^-1 (H^-1 = U^T U): row q of U holds the
  // compensation coefficients once columns < q are fixed.
  const Eigen::LLT<Eigen::MatrixXd> h_chol(h);
  const Eigen::MatrixXd h_inv = h_chol.solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::LLT<Eigen::MatrixXd> chol(h_inv);
  if (h_chol.info() != Eigen::Success || chol.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "Hessian is not positive definite after damping (smallest eigenvalue "
        << (d ? eig.eigenvalues().minCoeff() : 0.0) << ")";
    throw std::runtime_error(msg.str());
  }
  const Eigen::MatrixXd u = chol.matrixU();

  Eigen::MatrixXd w = w_in;
  Eigen::MatrixXd q(w.rows(), d);
  const Eigen::Index b = static_cast<Eigen::Index>(block_size);
  for (Eigen::Index i1 = 0; i1 < d; i1 += b) {
    const Eigen::Index i2 = std::min(i1 + b, d);
    const Eigen::Index count = i2 - i1;
    Eigen::MatrixXd err(w.rows(), count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index col = i1 + i;
      const double diag = u(col, col);
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        q(r, col) = quantize(w(r, col), static_cast<size_t>(r));
      }
      err.col(i) = (w.col(col) - q.col(col)) / diag;
      // Immediate update inside the block.
      w.block(0, col, w.rows(), i2 - col).noalias() -= err.col(i) * u.block(col, col, 1, i2 - col);
    }
    // Lazy update of everything to the right of the block.
    if (i2 < d) {
      w.rightCols(d - i2).noalias() -= err * u.block(i1, i2, count, d - i2);
    }
  }
  return q;
}

Eigen::MatrixXd gptq_quantize_layer(const Eigen::MatrixXd& w, const Eigen::MatrixXd& h,
                                    const NumericFormat& format, const std::vector<double>& row_scale,
                                    size_t block_size) {
  if (static_cast<size_t>(w.rows()) != row_scale.size()) {
    throw std::invalid_argument("one outer scale per weight row is required");
  }
  return gptq_quantize_layer(
      w, h, [&](double v, size_t row) { return fake_quantize(v, row_scale[row], format); }, block_size);
}

}  // namespace mfq
