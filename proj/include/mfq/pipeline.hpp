// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full post-training quantization flow for one recipe:
// CLE -> SmoothQuant -> weight quantization -> activation calibration ->
// bias correction.

#pragma once

#include <vector>

#include "mfq/calibration.hpp"
#include "mfq/dataset.hpp"
#include "mfq/equalize.hpp"
#include "mfq/graph.hpp"
#include "mfq/recipe.hpp"
#include "mfq/sites.hpp"

namespace mfq {

struct QuantizedModel {
  /// Weights on their grids; biases possibly corrected.
  LayerGraph graph;
  QuantRecipe recipe;
  CalibTable calib;
  std::vector<CalibRecord> calib_records;
  CleReport cle;
  SmoothQuantReport smoothquant;
  /// Layers where learned rounding fell back to round-to-nearest.
  size_t rounding_fallbacks = 0;

  std::vector<BoundSite> sites() const;
};

/// Replaces the weights of every layer that has a weight format, in
/// topological order. Learned rounding and GPTQ see the inputs produced by
/// the already-quantized prefix of the graph. Returns the number of
/// learned-rounding fallbacks.
size_t quantize_weights(LayerGraph& g, const QuantRecipe& recipe, const Dataset& calib_set);

/// Per-row outer scales of a layer's weights for `format`, one per output
/// channel (all equal for per-tensor scaling).
std::vector<double> weight_row_scales(const Node& layer, const NumericFormat& format, Granularity granularity);

QuantizedModel run_pipeline(const LayerGraph& model, const QuantRecipe& recipe, const Dataset& calib_set);

}  // namespace mfq
