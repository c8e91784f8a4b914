// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/forward.hpp"

#include <algorithm>
#include <stdexcept>

#include "mfq/quantizers.hpp"

namespace mfq {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Tensor conv2d(const Conv2dOp& op, const Tensor& x) {
  const size_t co = op.weight.dim(0);
  const size_t cog = co / op.groups;
  const size_t k = op.weight.size() / co;
  const size_t ho = (x.dim(1) + 2 * op.padding - op.weight.dim(2)) / op.stride + 1;
  const size_t wo = (x.dim(2) + 2 * op.padding - op.weight.dim(3)) / op.stride + 1;
  Tensor y({co, ho, wo});
  Eigen::Map<RowMatrix> out(y.raw(), co, ho * wo);
  for (size_t g = 0; g < op.groups; ++g) {
    Eigen::Map<const RowMatrix> w(op.weight.raw() + g * cog * k, cog, k);
    out.middleRows(g * cog, cog).noalias() = w * im2col(x, op, g);
  }
  for (size_t c = 0; c < co; ++c) {
    out.row(c).array() += op.bias[c];
  }
  return y;
}

Tensor linear(const LinearOp& op, const Tensor& x) {
  const size_t out_dim = op.weight.dim(0);
  Tensor y({out_dim});
  Eigen::Map<const RowMatrix> w(op.weight.raw(), out_dim, op.weight.dim(1));
  Eigen::Map<const Eigen::VectorXd> xv(x.raw(), x.size());
  Eigen::Map<Eigen::VectorXd> yv(y.raw(), out_dim);
  yv.noalias() = w * xv;
  for (size_t i = 0; i < out_dim; ++i) {
    yv[i] += op.bias[i];
  }
  return y;
}

void quantize_site(Tensor& t, const BoundSite& site) {
  for (double& v : t.data()) {
    v = fake_quantize(v, site.scale, site.format);
  }
}

}  // namespace

Eigen::MatrixXd im2col(const Tensor& x, const Conv2dOp& op, size_t group) {
  const size_t cig = op.weight.dim(1);
  const size_t kh = op.weight.dim(2);
  const size_t kw = op.weight.dim(3);
  const size_t h = x.dim(1);
  const size_t w = x.dim(2);
  const size_t ho = (h + 2 * op.padding - kh) / op.stride + 1;
  const size_t wo = (w + 2 * op.padding - kw) / op.stride + 1;
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cig * kh * kw),
                                               static_cast<Eigen::Index>(ho * wo));
  for (size_t ci = 0; ci < cig; ++ci) {
    const double* plane = x.raw() + (group * cig + ci) * h * w;
    for (size_t i = 0; i < kh; ++i) {
      for (size_t j = 0; j < kw; ++j) {
        const Eigen::Index row = static_cast<Eigen::Index>((ci * kh + i) * kw + j);
        for (size_t oy = 0; oy < ho; ++oy) {
          const ptrdiff_t y = static_cast<ptrdiff_t>(oy * op.stride + i) - static_cast<ptrdiff_t>(op.padding);
          if (y < 0 || y >= static_cast<ptrdiff_t>(h)) {
            continue;
          }
          for (size_t ox = 0; ox < wo; ++ox) {
            const ptrdiff_t xx = static_cast<ptrdiff_t>(ox * op.stride + j) - static_cast<ptrdiff_t>(op.padding);
            if (xx < 0 || xx >= static_cast<ptrdiff_t>(w)) {
              continue;
            }
            cols(row, static_cast<Eigen::Index>(oy * wo + ox)) =
                plane[static_cast<size_t>(y) * w + static_cast<size_t>(xx)];
          }
        }
      }
    }
  }
  return cols;
}

size_t layer_groups(const Node& layer) {
  if (const auto* c = std::get_if<Conv2dOp>(&layer.op)) {
    return c->groups;
  }
  if (std::holds_alternative<LinearOp>(layer.op)) {
    return 1;
  }
  throw std::invalid_argument("node '" + layer.name + "' is not a conv/linear layer");
}

Eigen::MatrixXd layer_columns(const Node& layer, const Tensor& input, size_t group) {
  if (const auto* c = std::get_if<Conv2dOp>(&layer.op)) {
    return im2col(input, *c, group);
  }
  if (group != 0) {
    throw std::invalid_argument("linear layers have a single group");
  }
  return Eigen::Map<const Eigen::VectorXd>(input.raw(), static_cast<Eigen::Index>(input.size()));
}

namespace {

const Tensor& layer_weight(const Node& layer) {
  if (const auto* c = std::get_if<Conv2dOp>(&layer.op)) {
    return c->weight;
  }
  return std::get<LinearOp>(layer.op).weight;
}

Tensor& layer_weight(Node& layer) {
  if (auto* c = std::get_if<Conv2dOp>(&layer.op)) {
    return c->weight;
  }
  return std::get<LinearOp>(layer.op).weight;
}

}  // namespace

Eigen::MatrixXd group_weight(const Node& layer, size_t group) {
  const size_t groups = layer_groups(layer);
  const Tensor& w = layer_weight(layer);
  const size_t rows = w.dim(0) / groups;
  const size_t k = w.size() / w.dim(0);
  return Eigen::Map<const RowMatrix>(w.raw() + group * rows * k, static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(k));
}

void set_group_weight(Node& layer, size_t group, const Eigen::MatrixXd& m) {
  const size_t groups = layer_groups(layer);
  Tensor& w = layer_weight(layer);
  const size_t rows = w.dim(0) / groups;
  const size_t k = w.size() / w.dim(0);
  if (static_cast<size_t>(m.rows()) != rows || static_cast<size_t>(m.cols()) != k) {
    throw std::invalid_argument("set_group_weight: shape mismatch");
  }
  Eigen::Map<RowMatrix>(w.raw() + group * rows * k, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k)) = m;
}

Tensor apply_node(const Node& node, std::span<const Tensor* const> in) {
  return std::visit(overloaded{
                        [&](const InputOp&) -> Tensor { throw std::logic_error("input nodes are not applied"); },
                        [&](const LinearOp& op) { return linear(op, *in[0]); },
                        [&](const Conv2dOp& op) { return conv2d(op, *in[0]); },
                        [&](const ReluOp&) {
                          Tensor y = *in[0];
                          for (double& v : y.data()) {
                            v = std::max(v, 0.0);
                          }
                          return y;
                        },
                        [&](const AddOp&) {
                          Tensor y = *in[0];
                          const Tensor& b = *in[1];
                          for (size_t i = 0; i < y.size(); ++i) {
                            y[i] += b[i];
                          }
                          return y;
                        },
                        [&](const GlobalAvgPoolOp&) {
                          const Tensor& x = *in[0];
                          const size_t c = x.dim(0);
                          const size_t hw = x.size() / c;
                          Tensor y({c});
                          for (size_t ch = 0; ch < c; ++ch) {
                            double acc = 0.0;
                            for (size_t k = 0; k < hw; ++k) {
                              acc += x[ch * hw + k];
                            }
                            y[ch] = acc / static_cast<double>(hw);
                          }
                          return y;
                        },
                        [&](const FlattenOp&) { return in[0]->reshaped({in[0]->size()}); },
                        [&](const ChannelScaleOp& op) {
                          Tensor y = *in[0];
                          const size_t inner = y.size() / op.scale.size();
                          for (size_t i = 0; i < y.size(); ++i) {
                            y[i] *= op.scale[i / inner];
                          }
                          return y;
                        },
                    },
                    node.op);
}

std::vector<Tensor> forward_all(const LayerGraph& g, const Tensor& x, std::span<const BoundSite> sites) {
  const size_t in_id = g.input_id();
  const auto& expected = std::get<InputOp>(g.node(in_id).op).shape;
  if (x.shape() != expected) {
    throw std::invalid_argument("input shape does not match the graph input");
  }
  std::vector<const BoundSite*> site_of(g.size(), nullptr);
  for (const auto& s : sites) {
    site_of.at(s.node) = &s;
  }
  std::vector<Tensor> out(g.size());
  std::vector<const Tensor*> args;
  for (size_t id = 0; id < g.size(); ++id) {
    const Node& node = g.node(id);
    if (id == in_id) {
      out[id] = x;
    } else {
      args.clear();
      for (size_t in : node.inputs) {
        args.push_back(&out[in]);
      }
      out[id] = apply_node(node, args);
    }
    if (site_of[id]) {
      quantize_site(out[id], *site_of[id]);
    }
  }
  return out;
}

Tensor forward(const LayerGraph& g, const Tensor& x, std::span<const BoundSite> sites) {
  auto all = forward_all(g, x, sites);
  return std::move(all[g.output_id()]);
}

Tensor forward_quantized(const LayerGraph& g, const QuantRecipe& recipe, const CalibTable& calib, const Tensor& x) {
  const auto sites = bind_sites(g, recipe, calib);
  return forward(g, x, sites);
}

size_t argmax(const Tensor& logits) {
  if (logits.empty()) {
    throw std::invalid_argument("argmax of an empty tensor");
  }
  const auto d = logits.data();
  return static_cast<size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

double accuracy(const LayerGraph& g, const Dataset& data, std::span<const BoundSite> sites) {
  if (data.size() == 0) {
    throw std::invalid_argument("accuracy over an empty dataset");
  }
  size_t correct = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    if (argmax(forward(g, data.inputs[i], sites)) == data.labels[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace mfq
