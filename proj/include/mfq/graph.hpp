// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// A small feed-forward layer graph. Nodes are stored in topological order:
// every input id of a node is smaller than the node's own id.
//
// Activations are per-sample (no batch dimension): images are [C, H, W],
// feature vectors are [F]. Batch norm is assumed folded into conv/linear.

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mfq/tensor.hpp"

namespace mfq {

struct InputOp {
  Shape shape;
};

/// y = W x + b, W is [out, in].
struct LinearOp {
  Tensor weight;
  Tensor bias;
};

/// Cross-correlation with zero padding, W is [Co, Ci / groups, kh, kw].
struct Conv2dOp {
  Tensor weight;
  Tensor bias;
  size_t stride = 1;
  size_t padding = 0;
  size_t groups = 1;
};

struct ReluOp {};
struct AddOp {};
/// [C, H, W] -> [C]
struct GlobalAvgPoolOp {};
/// Any shape -> [size]
struct FlattenOp {};
/// Multiplies channel (axis 0) j by scale[j]; holds SmoothQuant pre-scales
/// that could not be folded into a producer.
struct ChannelScaleOp {
  std::vector<double> scale;
};

using Op = std::variant<InputOp, LinearOp, Conv2dOp, ReluOp, AddOp, GlobalAvgPoolOp, FlattenOp, ChannelScaleOp>;

std::string op_kind(const Op& op);

struct Node {
  std::string name;
  Op op;
  std::vector<size_t> inputs;
};

/// True for nodes that own quantizable weights.
bool is_layer(const Node& node) noexcept;

class LayerGraph {
 public:
  size_t add_input(std::string name, Shape shape);
  size_t add(std::string name, Op op, std::vector<size_t> inputs);
  void set_output(size_t id);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(size_t id) const { return nodes_.at(id); }
  Node& node(size_t id) { return nodes_.at(id); }
  size_t size() const noexcept { return nodes_.size(); }
  size_t input_id() const;
  size_t output_id() const;
  bool has_output() const noexcept { return output_ != kNone; }

  /// Looks a node up by name; throws std::out_of_range.
  size_t find(const std::string& name) const;

  /// Ids of nodes consuming the output of `id`, ascending.
  std::vector<size_t> consumers(size_t id) const;

  /// Conv/Linear ids in topological order.
  std::vector<size_t> layer_ids() const;

  /// Output shape of every node. Throws std::invalid_argument on any
  /// structural or shape error.
  std::vector<Shape> infer_shapes() const;
  void validate() const { (void)infer_shapes(); }

  /// Rebuilds the graph with `op` inserted on the edge feeding input slot
  /// `slot` of node `consumer`. Returns the new node's id.
  size_t insert_before(size_t consumer, size_t slot, std::string name, Op op);

  size_t parameter_count() const;

 private:
  static constexpr size_t kNone = static_cast<size_t>(-1);
  std::vector<Node> nodes_;
  size_t output_ = kNone;
};

/// Fan-in of a layer (per output element), used for weight layouts and im2col.
size_t layer_in_channels(const Node& node);
size_t layer_out_channels(const Node& node);

}  // namespace mfq
