// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Function-preserving rescalings applied before quantization (cross-layer
// equalization, SmoothQuant) and empirical bias correction applied after.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfq/dataset.hpp"
#include "mfq/graph.hpp"
#include "mfq/recipe.hpp"
#include "mfq/sites.hpp"

namespace mfq {

/// Layers whose output channels can be rescaled together (sources) and the
/// layers that read those channels (sinks). Everything between them is
/// ReLU, Add, global pooling, rank-1 flatten or a channel scale, so
/// f(k x) = k f(x) holds channel-wise along every path. Adds tie the
/// channels of all their producers into one group.
struct ScalingGroup {
  std::vector<size_t> sources;
  std::vector<size_t> sinks;
  size_t channels = 0;
};

/// Groups in the order of their first source. Regions that reach the graph
/// input or output, or pass through a shape-changing op, are left out.
std::vector<ScalingGroup> find_scaling_groups(const LayerGraph& g);

/// The group whose sinks include `layer`, or nullptr.
const ScalingGroup* group_feeding(const std::vector<ScalingGroup>& groups, size_t layer);

/// Max |w| per output channel (bias excluded) / per input channel.
std::vector<double> out_channel_max(const Node& layer);
std::vector<double> in_channel_max(const Node& layer);

/// Divides output channel j (weights and bias) by k[j].
void divide_out_channels(Node& layer, std::span<const double> k);
/// Multiplies the weights reading input channel j by k[j].
void multiply_in_channels(Node& layer, std::span<const double> k);

/// Bias magnitudes enter the source range as |b| / kBiasRangeDivisor.
inline constexpr double kBiasRangeDivisor = 2.0;

/// Per-channel factors for one group: k = sqrt(r_src / r_sink), 1 where
/// either range is zero.
std::vector<double> equalization_factors(const LayerGraph& g, const ScalingGroup& group);

struct CleReport {
  size_t groups = 0;
  /// max_j |k_j - 1| of each sweep.
  std::vector<double> max_change;
};

/// `iters` sweeps over all groups, in place.
CleReport cross_layer_equalize(LayerGraph& g, int iters);

/// Max |x| per channel (axis 0) of the tensor entering each layer, over
/// the first `max_samples` samples. Indexed like g.layer_ids().
std::vector<std::vector<double>> capture_input_channel_max(const LayerGraph& g, const Dataset& data,
                                                           size_t max_samples);

/// sf_j = ax_j^alpha / aw_j^(1 - alpha); 1 where either maximum is zero.
std::vector<double> smoothing_factors(std::span<const double> act_max, std::span<const double> weight_max,
                                      double alpha);

struct SmoothQuantReport {
  size_t folded = 0;
  size_t inserted = 0;
};

/// Weights reading channel j are multiplied by sf_j and the activation is
/// divided by sf_j. The division is folded into the producing layers when
/// the layer is the only reader of that group, otherwise a ChannelScaleOp
/// named "<layer>.smooth" is inserted in front of it.
SmoothQuantReport smooth_quant(LayerGraph& g, const Dataset& calib_set, double alpha, size_t max_samples);

/// Subtracts (W_q - W) E[x] from each layer bias, layer by layer, where
/// E[x] is the mean input patch under the quantized upstream graph
/// (quantized weights, corrected biases so far, quantized activations).
/// `reference` holds the unquantized weights and has the same topology.
void bias_correct(LayerGraph& quantized, const LayerGraph& reference, const QuantRecipe& recipe,
                  const CalibTable& calib, const Dataset& calib_set);

/// Mean over the calibration samples and output pixels of the input
/// columns of `layer`, computed under `sites`.
std::vector<Eigen::VectorXd> mean_layer_columns(const LayerGraph& g, size_t layer, const Dataset& data,
                                                size_t max_samples, std::span<const BoundSite> sites);

}  // namespace mfq
