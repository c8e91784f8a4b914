// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/graph.hpp"

#include <set>
#include <stdexcept>

namespace mfq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void shape_error(const Node& node, const std::string& what) {
  throw std::invalid_argument("node '" + node.name + "' (" + op_kind(node.op) + "): " + what);
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    out += (i ? "," : "") + std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace

std::string op_kind(const Op& op) {
  return std::visit(overloaded{
                        [](const InputOp&) { return "input"; },
                        [](const LinearOp&) { return "linear"; },
                        [](const Conv2dOp&) { return "conv2d"; },
                        [](const ReluOp&) { return "relu"; },
                        [](const AddOp&) { return "add"; },
                        [](const GlobalAvgPoolOp&) { return "global_avg_pool"; },
                        [](const FlattenOp&) { return "flatten"; },
                        [](const ChannelScaleOp&) { return "channel_scale"; },
                    },
                    op);
}

bool is_layer(const Node& node) noexcept {
  return std::holds_alternative<LinearOp>(node.op) || std::holds_alternative<Conv2dOp>(node.op);
}

size_t layer_in_channels(const Node& node) {
  if (const auto* l = std::get_if<LinearOp>(&node.op)) {
    return l->weight.dim(1);
  }
  const auto& c = std::get<Conv2dOp>(node.op);
  return c.weight.dim(1) * c.groups;
}

size_t layer_out_channels(const Node& node) {
  if (const auto* l = std::get_if<LinearOp>(&node.op)) {
    return l->weight.dim(0);
  }
  return std::get<Conv2dOp>(node.op).weight.dim(0);
}

size_t LayerGraph::add_input(std::string name, Shape shape) {
  return add(std::move(name), InputOp{std::move(shape)}, {});
}

size_t LayerGraph::add(std::string name, Op op, std::vector<size_t> inputs) {
  for (size_t in : inputs) {
    if (in >= nodes_.size()) {
      throw std::invalid_argument("node '" + name + "' references a node that does not exist yet");
    }
  }
  nodes_.push_back(Node{std::move(name), std::move(op), std::move(inputs)});
  return nodes_.size() - 1;
}

void LayerGraph::set_output(size_t id) {
  if (id >= nodes_.size()) {
    throw std::invalid_argument("output id out of range");
  }
  output_ = id;
}

size_t LayerGraph::input_id() const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (std::holds_alternative<InputOp>(nodes_[i].op)) {
      return i;
    }
  }
  throw std::invalid_argument("graph has no input node");
}

size_t LayerGraph::output_id() const {
  if (output_ == kNone) {
    throw std::invalid_argument("graph has no output node");
  }
  return output_;
}

size_t LayerGraph::find(const std::string& name) const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) {
      return i;
    }
  }
  throw std::out_of_range("no node named '" + name + "'");
}

std::vector<size_t> LayerGraph::consumers(size_t id) const {
  std::vector<size_t> out;
  for (size_t i = id + 1; i < nodes_.size(); ++i) {
    for (size_t in : nodes_[i].inputs) {
      if (in == id) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<size_t> LayerGraph::layer_ids() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (is_layer(nodes_[i])) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<Shape> LayerGraph::infer_shapes() const {
  std::vector<Shape> shapes(nodes_.size());
  std::set<std::string> names;
  size_t input_count = 0;
  for (size_t id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.name.empty() || !names.insert(node.name).second) {
      shape_error(node, "node names must be unique and non-empty");
    }
    for (size_t in : node.inputs) {
      if (in >= id) {
        shape_error(node, "inputs must precede the node");
      }
    }
    const size_t arity = std::holds_alternative<InputOp>(node.op) ? 0 : std::holds_alternative<AddOp>(node.op) ? 2 : 1;
    if (node.inputs.size() != arity) {
      shape_error(node, "expected " + std::to_string(arity) + " inputs");
    }
    const Shape in = arity ? shapes[node.inputs[0]] : Shape{};
    shapes[id] = std::visit(
        overloaded{
            [&](const InputOp& op) {
              ++input_count;
              if (op.shape.empty() || element_count(op.shape) == 0) {
                shape_error(node, "input shape must be non-empty");
              }
              return op.shape;
            },
            [&](const LinearOp& op) {
              if (op.weight.rank() != 2) {
                shape_error(node, "weight must be [out, in]");
              }
              if (in.size() != 1 || in[0] != op.weight.dim(1)) {
                shape_error(node, "input " + shape_str(in) + " does not match weight " + shape_str(op.weight.shape()));
              }
              if (op.bias.shape() != Shape{op.weight.dim(0)}) {
                shape_error(node, "bias must be [out]");
              }
              return Shape{op.weight.dim(0)};
            },
            [&](const Conv2dOp& op) {
              if (op.weight.rank() != 4) {
                shape_error(node, "weight must be [Co, Ci/g, kh, kw]");
              }
              if (in.size() != 3) {
                shape_error(node, "input must be [C, H, W]");
              }
              const size_t co = op.weight.dim(0);
              if (op.groups == 0 || op.stride == 0 || in[0] % op.groups || co % op.groups ||
                  op.weight.dim(1) * op.groups != in[0]) {
                shape_error(node, "channel/group layout mismatch with input " + shape_str(in));
              }
              if (op.bias.shape() != Shape{co}) {
                shape_error(node, "bias must be [Co]");
              }
              const size_t kh = op.weight.dim(2);
              const size_t kw = op.weight.dim(3);
              if (in[1] + 2 * op.padding < kh || in[2] + 2 * op.padding < kw) {
                shape_error(node, "kernel larger than padded input");
              }
              return Shape{co, (in[1] + 2 * op.padding - kh) / op.stride + 1,
                           (in[2] + 2 * op.padding - kw) / op.stride + 1};
            },
            [&](const ReluOp&) { return in; },
            [&](const AddOp&) {
              if (shapes[node.inputs[1]] != in) {
                shape_error(node, "operand shapes differ");
              }
              return in;
            },
            [&](const GlobalAvgPoolOp&) {
              if (in.size() != 3) {
                shape_error(node, "input must be [C, H, W]");
              }
              return Shape{in[0]};
            },
            [&](const FlattenOp&) { return Shape{element_count(in)}; },
            [&](const ChannelScaleOp& op) {
              if (in.empty() || op.scale.size() != in[0]) {
                shape_error(node, "scale count must equal the channel count");
              }
              return in;
            },
        },
        node.op);
  }
  if (input_count != 1) {
    throw std::invalid_argument("graph must have exactly one input node");
  }
  (void)output_id();
  return shapes;
}

size_t LayerGraph::insert_before(size_t consumer, size_t slot, std::string name, Op op) {
  if (consumer >= nodes_.size() || slot >= nodes_[consumer].inputs.size()) {
    throw std::invalid_argument("insert_before: bad consumer/slot");
  }
  const size_t source = nodes_[consumer].inputs[slot];
  auto shift = [consumer](size_t id) { return id >= consumer ? id + 1 : id; };
  std::vector<Node> rebuilt;
  rebuilt.reserve(nodes_.size() + 1);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (i == consumer) {
      rebuilt.push_back(Node{std::move(name), std::move(op), {source}});
    }
    Node n = std::move(nodes_[i]);
    for (size_t& in : n.inputs) {
      in = shift(in);
    }
    rebuilt.push_back(std::move(n));
  }
  rebuilt[consumer + 1].inputs[slot] = consumer;
  nodes_ = std::move(rebuilt);
  if (output_ != kNone) {
    output_ = shift(output_);
  }
  return consumer;
}

size_t LayerGraph::parameter_count() const {
  size_t count = 0;
  for (const Node& n : nodes_) {
    if (const auto* l = std::get_if<LinearOp>(&n.op)) {
      count += l->weight.size() + l->bias.size();
    } else if (const auto* c = std::get_if<Conv2dOp>(&n.op)) {
      count += c->weight.size() + c->bias.size();
    }
  }
  return count;
}

}  // namespace mfq
