// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Full-precision and fake-quantized inference.

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfq/dataset.hpp"
#include "mfq/graph.hpp"
#include "mfq/sites.hpp"

namespace mfq {

/// Patch matrix of one conv group: rows follow the weight layout
/// (ci, ky, kx) of that group, columns are output pixels in row-major order.
Eigen::MatrixXd im2col(const Tensor& x, const Conv2dOp& op, size_t group);

/// Columns a layer multiplies its weights against: im2col patches for a
/// conv group, or the single input vector for a Linear (group must be 0).
Eigen::MatrixXd layer_columns(const Node& layer, const Tensor& input, size_t group);

size_t layer_groups(const Node& layer);

/// Weight rows of one group as a [rows, fan-in] matrix.
Eigen::MatrixXd group_weight(const Node& layer, size_t group);
void set_group_weight(Node& layer, size_t group, const Eigen::MatrixXd& w);

/// Output of one node given the outputs of its inputs.
Tensor apply_node(const Node& node, std::span<const Tensor* const> inputs);

/// Outputs of every node. Activations at `sites` are fake-quantized with
/// their static scale before anything consumes them.
std::vector<Tensor> forward_all(const LayerGraph& g, const Tensor& x, std::span<const BoundSite> sites = {});

Tensor forward(const LayerGraph& g, const Tensor& x, std::span<const BoundSite> sites = {});

/// Weights of `g` are expected to be quantized already; this adds the
/// activation quantizers described by `recipe` and `calib`.
Tensor forward_quantized(const LayerGraph& g, const QuantRecipe& recipe, const CalibTable& calib, const Tensor& x);

/// Index of the largest logit, first one on ties.
size_t argmax(const Tensor& logits);

/// Top-1 accuracy. Throws std::invalid_argument on an empty dataset.
double accuracy(const LayerGraph& g, const Dataset& data, std::span<const BoundSite> sites = {});

}  // namespace mfq
