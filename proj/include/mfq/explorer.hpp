// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Design-space sweeps over weight/activation formats, Pareto fronts and
// CSV/JSON reports.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfq/dataset.hpp"
#include "mfq/graph.hpp"
#include "mfq/recipe.hpp"
#include "mfq/reference_data.hpp"

namespace mfq {

struct SweepSpec {
  std::vector<int> w_bits{3, 4, 5, 6, 7, 8};
  std::vector<int> a_bits{3, 4, 5, 6, 7, 8};
  bool include_int = true;
  bool include_fp = true;
  std::vector<Granularity> granularities{Granularity::per_channel};
  /// Ablation axis: SmoothQuant off / on (alpha from `base`, default 0.5).
  std::vector<bool> smoothquant{false};
  std::vector<RoundingMethod> rounding{RoundingMethod::nearest};
  /// Method toggles and hyperparameters shared by every configuration.
  QuantRecipe base;
  /// Reference model whose LUT column is attached; none leaves it empty.
  std::optional<ReferenceModel> lut_model = ReferenceModel::resnet18;
  uint64_t seed = 0;
  size_t jobs = 1;
  size_t calib_samples = 1000;
};

/// Throws std::invalid_argument on unknown keys or bad values.
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

/// One sweep job before it runs.
struct SweepConfig {
  std::string name;
  FormatKind kind = FormatKind::int_kind;
  int w_bits = 0;
  int a_bits = 0;
  std::optional<ExpMan> weight_split;
  std::optional<ExpMan> activation_split;
  QuantRecipe recipe;
};

/// Every configuration of `spec`: (W, A) pairs with A >= W, and for
/// minifloats every split with e in [1, r - 1).
std::vector<SweepConfig> enumerate_configs(const SweepSpec& spec);

/// Minifloat splits of an r-bit format: e = 1 .. r - 2, m = r - 1 - e.
std::vector<ExpMan> minifloat_splits(int bits);

struct SweepResult {
  std::string config;
  FormatKind kind = FormatKind::int_kind;
  int w_bits = 0;
  int a_bits = 0;
  std::optional<ExpMan> weight_split;
  std::optional<ExpMan> activation_split;
  std::string granularity;
  std::string methods;
  double accuracy = 0.0;
  int dot_bitwidth = 0;
  int acc_width = 0;
  std::optional<int> lut;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;

  friend bool operator==(const SweepResult& a, const SweepResult& b) {
    return a.config == b.config && a.kind == b.kind && a.w_bits == b.w_bits && a.a_bits == b.a_bits &&
           a.weight_split == b.weight_split && a.activation_split == b.activation_split &&
           a.granularity == b.granularity && a.methods == b.methods && a.accuracy == b.accuracy &&
           a.dot_bitwidth == b.dot_bitwidth && a.acc_width == b.acc_width && a.lut == b.lut;
  }
};

/// Runs one configuration; failures are caught and recorded with chance
/// accuracy (1 / classes).
SweepResult run_config(const SweepConfig& cfg, const LayerGraph& model, const Dataset& calib_set,
                       const Dataset& eval_set, std::optional<ReferenceModel> lut_model);

/// All configurations, `spec.jobs` at a time. Sorted by config name.
std::vector<SweepResult> run_sweep(const LayerGraph& model, const Dataset& calib_set, const Dataset& eval_set,
                                   const SweepSpec& spec);

/// Integer results unchanged; for minifloats only the most accurate split per
/// (W, A, granularity, methods), ties broken by config name.
std::vector<SweepResult> best_per_bitwidth(const std::vector<SweepResult>& results);

/// Calibration subset: `count` samples of `data` in a seeded random order.
Dataset calibration_subset(const Dataset& data, size_t count, uint64_t seed);

enum class CostAxis { dot_bitwidth, lut, acc_width };
CostAxis parse_cost_axis(const std::string& text);
std::string to_string(CostAxis a);

struct ParetoPoint {
  std::string config;
  double cost = 0.0;
  double accuracy = 0.0;
  friend bool operator==(const ParetoPoint&, const ParetoPoint&) = default;
};

/// Non-dominated points sorted by cost. Points without a value on the axis
/// (no LUT entry) are ignored. Equal (cost, accuracy) keeps the smallest name.
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);
std::vector<ParetoPoint> pareto_points(const std::vector<SweepResult>& results, CostAxis axis);

std::string results_to_csv(const std::vector<SweepResult>& results);
std::vector<SweepResult> results_from_csv(const std::string& text);
nlohmann::json results_to_json(const std::vector<SweepResult>& results);
std::string pareto_to_csv(const std::vector<ParetoPoint>& points, CostAxis axis);

/// Published rows for one reference model as results (accuracy as a
/// fraction), int and fp per (W, A).
std::vector<SweepResult> reference_results(ReferenceModel model);

/// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace mfq
