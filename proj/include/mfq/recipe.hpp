// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// QuantRecipe: which formats go where, and which PTQ methods run.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mfq/formats.hpp"
#include "mfq/quantizers.hpp"

namespace mfq {

struct LearnedRoundingParams {
  int steps = 1000;
  double lr = 1e-2;
  double lambda = 0.01;
  double beta_start = 20.0;
  double beta_end = 2.0;
  double warmup_frac = 0.2;
  uint64_t seed = 0;
};

struct GptqParams {
  size_t block_size = 32;
  double damping = 0.01;
};

struct CalibrationParams {
  size_t batch_size = 32;
  size_t max_samples = 1000;
  size_t candidates = 512;
  int iters = 15;
};

enum class RoundingMethod { nearest, learned, gptq };

std::string to_string(RoundingMethod m);

/// First/last-layer override. `automatic` picks int8 for integer recipes and
/// e3m4 for minifloat recipes.
enum class FirstLastPolicy { automatic, none, explicit_formats };

struct QuantRecipe {
  std::optional<NumericFormat> weight_format;
  std::optional<NumericFormat> activation_format;
  Granularity weight_granularity = Granularity::per_channel;

  FirstLastPolicy first_last = FirstLastPolicy::automatic;
  std::optional<NumericFormat> first_last_weight;
  std::optional<NumericFormat> first_last_activation;

  bool cle = false;
  int cle_iters = 10;
  std::optional<double> smoothquant_alpha;
  bool bias_correction = false;
  RoundingMethod rounding = RoundingMethod::nearest;
  LearnedRoundingParams learned_rounding;
  GptqParams gptq;
  CalibrationParams calibration;

  /// "cle+sq+bc+gptq" style tag; "rtn" when nothing is enabled.
  std::string methods_tag() const;

  /// Effective override formats, or nullopt when no override applies.
  std::optional<NumericFormat> override_weight_format() const;
  std::optional<NumericFormat> override_activation_format() const;
};

/// Throws std::invalid_argument on unknown keys, bad literals, or both
/// learned rounding and GPTQ enabled.
QuantRecipe recipe_from_json(const nlohmann::json& j);
nlohmann::json recipe_to_json(const QuantRecipe& recipe);

}  // namespace mfq
