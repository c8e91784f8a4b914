// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Where activations get quantized, and with which format.
//
// A site is a node whose output is consumed by a Conv/Linear, the output of
// every Add, and the graph output. Sites are identified by node name.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfq/formats.hpp"
#include "mfq/graph.hpp"
#include "mfq/recipe.hpp"

namespace mfq {

struct ActivationSite {
  size_t node = 0;
  std::string name;
  NumericFormat format;
};

struct CalibEntry {
  double t = 0.0;
  double s = 0.0;
  NumericFormat format = IntFormat(8);
  /// Set when every observed value was zero.
  bool degenerate = false;
};

using CalibTable = std::map<std::string, CalibEntry>;

/// Sites that carry a format under `recipe`, in node order. Empty when the
/// recipe quantizes no activations.
std::vector<ActivationSite> activation_sites(const LayerGraph& g, const QuantRecipe& recipe);

/// Weight format of layer `id`, including the first/last-layer override.
std::optional<NumericFormat> weight_format_for(const LayerGraph& g, const QuantRecipe& recipe, size_t id);

/// A site with its static scale, ready for inference.
struct BoundSite {
  size_t node = 0;
  NumericFormat format;
  double scale = 1.0;
};

/// Throws ConfigError when a site has no table entry or the entry's format
/// disagrees with the recipe.
std::vector<BoundSite> bind_sites(const LayerGraph& g, const QuantRecipe& recipe, const CalibTable& calib);

nlohmann::json calib_to_json(const CalibTable& table);
CalibTable calib_from_json(const nlohmann::json& j);

}  // namespace mfq
