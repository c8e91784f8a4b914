// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/pipeline.hpp"

#include <algorithm>

#include "mfq/forward.hpp"
#include "mfq/gptq.hpp"
#include "mfq/quantizers.hpp"
#include "mfq/rounding_opt.hpp"

namespace mfq {

namespace {

Tensor& weight_of(Node& n) {
  if (auto* c = std::get_if<Conv2dOp>(&n.op)) {
    return c->weight;
  }
  return std::get<LinearOp>(n.op).weight;
}

const Tensor& weight_of(const Node& n) {
  if (const auto* c = std::get_if<Conv2dOp>(&n.op)) {
    return c->weight;
  }
  return std::get<LinearOp>(n.op).weight;
}

// Gram matrix X X^T and column count of every group's input patches.
struct GroupInputs {
  std::vector<Eigen::MatrixXd> gram;
  double columns = 0.0;
};

GroupInputs collect_inputs(const LayerGraph& g, size_t layer, const Dataset& data, size_t max_samples) {
  const Node& node = g.node(layer);
  const size_t groups = layer_groups(node);
  GroupInputs in;
  in.gram.resize(groups);
  const size_t count = std::min(data.size(), max_samples);
  for (size_t n = 0; n < count; ++n) {
    const auto outs = forward_all(g, data.inputs[n]);
    for (size_t gi = 0; gi < groups; ++gi) {
      const Eigen::MatrixXd cols = layer_columns(node, outs[node.inputs[0]], gi);
      if (n == 0) {
        in.gram[gi] = Eigen::MatrixXd::Zero(cols.rows(), cols.rows());
      }
      in.gram[gi].selfadjointView<Eigen::Lower>().rankUpdate(cols);
      if (gi == 0) {
        in.columns += static_cast<double>(cols.cols());
      }
    }
  }
  for (auto& m : in.gram) {
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  }
  return in;
}

}  // namespace

std::vector<BoundSite> QuantizedModel::sites() const { return bind_sites(graph, recipe, calib); }

std::vector<double> weight_row_scales(const Node& layer, const NumericFormat& format, Granularity granularity) {
  const Tensor& w = weight_of(layer);
  const ScalingSpec spec = compute_scale(w, format, granularity, 0);
  if (granularity == Granularity::per_tensor) {
    return std::vector<double>(w.dim(0), spec.s[0]);
  }
  return spec.s;
}

size_t quantize_weights(LayerGraph& g, const QuantRecipe& recipe, const Dataset& calib_set) {
  size_t fallbacks = 0;
  for (size_t id : g.layer_ids()) {
    const auto format = weight_format_for(g, recipe, id);
    if (!format) {
      continue;
    }
    Node& node = g.node(id);
    const auto scales = weight_row_scales(node, *format, recipe.weight_granularity);
    if (recipe.rounding == RoundingMethod::nearest || calib_set.size() == 0) {
      Tensor& w = weight_of(node);
      ScalingSpec spec;
      spec.granularity = Granularity::per_channel;
      spec.s = scales;
      spec.t = scales;
      w = quantize(w, spec, *format).values;
      continue;
    }
    const GroupInputs inputs = collect_inputs(g, id, calib_set, recipe.calibration.max_samples);
    const size_t groups = layer_groups(node);
    const size_t rows = layer_out_channels(node) / groups;
    for (size_t gi = 0; gi < groups; ++gi) {
      const Eigen::MatrixXd w = group_weight(node, gi);
      const std::vector<double> row_scale(scales.begin() + static_cast<ptrdiff_t>(gi * rows),
                                          scales.begin() + static_cast<ptrdiff_t>((gi + 1) * rows));
      if (recipe.rounding == RoundingMethod::learned) {
        const auto r = learn_rounding(w, inputs.gram[gi], inputs.columns, row_scale, *format, recipe.learned_rounding);
        fallbacks += r.fell_back ? 1 : 0;
        set_group_weight(node, gi, r.weights);
      } else {
        const Eigen::MatrixXd h = damp_hessian(2.0 * inputs.gram[gi], recipe.gptq.damping);
        set_group_weight(node, gi, gptq_quantize_layer(w, h, *format, row_scale, recipe.gptq.block_size));
      }
    }
  }
  return fallbacks;
}

QuantizedModel run_pipeline(const LayerGraph& model, const QuantRecipe& recipe, const Dataset& calib_set) {
  QuantizedModel q{model, recipe, {}, {}, {}, {}, 0};
  if (recipe.cle) {
    q.cle = cross_layer_equalize(q.graph, recipe.cle_iters);
  }
  if (recipe.smoothquant_alpha) {
    q.smoothquant = smooth_quant(q.graph, calib_set, *recipe.smoothquant_alpha, recipe.calibration.max_samples);
  }
  const LayerGraph reference = q.graph;
  q.rounding_fallbacks = quantize_weights(q.graph, recipe, calib_set);
  q.calib = calibrate_graph(q.graph, recipe, calib_set, &q.calib_records);
  if (recipe.bias_correction) {
    bias_correct(q.graph, reference, recipe, q.calib, calib_set);
  }
  return q;
}

}  // namespace mfq
