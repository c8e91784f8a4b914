// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/sites.hpp"

#include "mfq/errors.hpp"

namespace mfq {

std::vector<ActivationSite> activation_sites(const LayerGraph& g, const QuantRecipe& recipe) {
  const auto layers = g.layer_ids();
  const auto override_fmt = recipe.override_activation_format();
  const size_t out = g.output_id();
  std::vector<ActivationSite> sites;
  for (size_t id = 0; id < g.size(); ++id) {
    bool boundary = id == out;
    bool is_site = boundary || std::holds_alternative<AddOp>(g.node(id).op);
    for (size_t c : g.consumers(id)) {
      if (is_layer(g.node(c))) {
        is_site = true;
        boundary = boundary || (!layers.empty() && (c == layers.front() || c == layers.back()));
      }
    }
    if (!is_site) {
      continue;
    }
    std::optional<NumericFormat> fmt = recipe.activation_format;
    if (boundary && override_fmt) {
      fmt = override_fmt;
    }
    if (fmt) {
      sites.push_back({id, g.node(id).name, *fmt});
    }
  }
  return sites;
}

std::optional<NumericFormat> weight_format_for(const LayerGraph& g, const QuantRecipe& recipe, size_t id) {
  const auto layers = g.layer_ids();
  const bool boundary = !layers.empty() && (id == layers.front() || id == layers.back());
  if (boundary) {
    if (auto o = recipe.override_weight_format()) {
      return o;
    }
  }
  return recipe.weight_format;
}

std::vector<BoundSite> bind_sites(const LayerGraph& g, const QuantRecipe& recipe, const CalibTable& calib) {
  std::vector<BoundSite> bound;
  for (const auto& site : activation_sites(g, recipe)) {
    auto it = calib.find(site.name);
    if (it == calib.end()) {
      throw ConfigError("no calibration entry for activation site '" + site.name + "'");
    }
    if (!(it->second.format == site.format)) {
      throw ConfigError("calibration entry for '" + site.name + "' uses " + to_string(it->second.format) +
                        " but the recipe asks for " + to_string(site.format));
    }
    if (!(it->second.s > 0.0)) {
      throw ConfigError("calibration entry for '" + site.name + "' has a non-positive scale");
    }
    bound.push_back({site.node, site.format, it->second.s});
  }
  return bound;
}

nlohmann::json calib_to_json(const CalibTable& table) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, e] : table) {
    j[name] = {{"t", e.t}, {"s", e.s}, {"format", to_string(e.format)}};
    if (e.degenerate) {
      j[name]["degenerate"] = true;
    }
  }
  return j;
}

CalibTable calib_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("calibration table must be a JSON object");
  }
  CalibTable table;
  for (const auto& [name, v] : j.items()) {
    CalibEntry e;
    e.t = v.at("t").get<double>();
    e.s = v.at("s").get<double>();
    e.format = parse_format(v.at("format").get<std::string>());
    e.degenerate = v.value("degenerate", false);
    table.emplace(name, e);
  }
  return table;
}

}  // namespace mfq
