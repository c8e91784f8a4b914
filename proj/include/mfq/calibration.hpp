// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Static activation ranges chosen by per-site MSE minimization.
//
// For each batch the clipping range t is searched over the candidates
// t_i = max|X| * i / N, i = 1..N, with a discrete Fibonacci search. The
// final range is the mean of the per-batch optima.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfq/dataset.hpp"
#include "mfq/graph.hpp"
#include "mfq/recipe.hpp"
#include "mfq/sites.hpp"

namespace mfq {

/// Mean squared quantize-dequantize error of `x` with range `t`.
double quantization_mse(std::span<const double> x, double t, const NumericFormat& format);

struct RangeSearch {
  double t = 0.0;
  size_t index = 0;  // 1-based candidate index
  double mse = 0.0;
  double baseline_mse = 0.0;  // at t = max|X|
  bool fell_back = false;
};

/// Fibonacci search over `candidates` points, cross-checked by rescanning
/// around the four best points of a stride-8 coarse pass. Falls back to the
/// better of the max-range baseline and an exhaustive scan when the search
/// ends up worse than the baseline. `x` must contain a non-zero value.
RangeSearch fibonacci_range_search(std::span<const double> x, const NumericFormat& format, size_t candidates = 512,
                                   int iters = 15);

/// Every candidate evaluated; ties resolve to the smallest t.
RangeSearch exhaustive_range_search(std::span<const double> x, const NumericFormat& format, size_t candidates = 512);

struct CalibRecord {
  std::string site;
  std::vector<double> batch_max;
  std::vector<double> batch_t;
  double t = 0.0;
  bool degenerate = false;
};

/// Batches whose values are all zero are skipped; if every batch is zero
/// the record is flagged degenerate and t is the smallest usable range.
CalibRecord calibrate_site(const std::vector<std::vector<double>>& batches, const NumericFormat& format,
                           const CalibrationParams& params = {});

/// Runs `g` in full precision over up to `max_samples` samples and
/// calibrates every activation site of `recipe`.
CalibTable calibrate_graph(const LayerGraph& g, const QuantRecipe& recipe, const Dataset& calib_set,
                           std::vector<CalibRecord>* records = nullptr);

}  // namespace mfq
