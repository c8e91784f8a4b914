// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/recipe.hpp"

#include <set>
#include <stdexcept>

namespace mfq {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument("recipe: '" + where + "' must be an object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("recipe: unknown key '" + where + "." + key + "'");
    }
  }
}

std::optional<NumericFormat> format_or_none(const json& j) {
  if (j.is_null()) {
    return std::nullopt;
  }
  const auto text = j.get<std::string>();
  if (text == "none" || text == "fp32" || text == "float") {
    return std::nullopt;
  }
  return parse_format(text);
}

json format_json(const std::optional<NumericFormat>& f) { return f ? json(to_string(*f)) : json("none"); }

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

}  // namespace

std::string to_string(RoundingMethod m) {
  switch (m) {
    case RoundingMethod::nearest:
      return "rtn";
    case RoundingMethod::learned:
      return "lr";
    case RoundingMethod::gptq:
      return "gptq";
  }
  return "rtn";
}

std::string QuantRecipe::methods_tag() const {
  std::string tag;
  auto add = [&](const std::string& part) { tag += (tag.empty() ? "" : "+") + part; };
  if (cle) {
    add("cle");
  }
  if (smoothquant_alpha) {
    add("sq");
  }
  if (bias_correction) {
    add("bc");
  }
  add(to_string(rounding));
  return tag;
}

std::optional<NumericFormat> QuantRecipe::override_weight_format() const {
  switch (first_last) {
    case FirstLastPolicy::none:
      return std::nullopt;
    case FirstLastPolicy::explicit_formats:
      return first_last_weight;
    case FirstLastPolicy::automatic:
      if (!weight_format) {
        return std::nullopt;
      }
      return is_int(*weight_format) ? NumericFormat(IntFormat(8)) : NumericFormat(MinifloatFormat(3, 4));
  }
  return std::nullopt;
}

std::optional<NumericFormat> QuantRecipe::override_activation_format() const {
  switch (first_last) {
    case FirstLastPolicy::none:
      return std::nullopt;
    case FirstLastPolicy::explicit_formats:
      return first_last_activation;
    case FirstLastPolicy::automatic:
      if (!activation_format) {
        return std::nullopt;
      }
      return is_int(*activation_format) ? NumericFormat(IntFormat(8)) : NumericFormat(MinifloatFormat(3, 4));
  }
  return std::nullopt;
}

QuantRecipe recipe_from_json(const json& j) {
  check_keys(j,
             {"weight_format", "activation_format", "weight_granularity", "first_last", "cle", "smoothquant",
              "bias_correction", "learned_rounding", "gptq", "calibration"},
             "recipe");
  QuantRecipe r;
  if (j.contains("weight_format")) {
    r.weight_format = format_or_none(j.at("weight_format"));
  }
  if (j.contains("activation_format")) {
    r.activation_format = format_or_none(j.at("activation_format"));
  }
  if (j.contains("weight_granularity")) {
    r.weight_granularity = parse_granularity(j.at("weight_granularity").get<std::string>());
  }
  if (j.contains("first_last")) {
    const json& fl = j.at("first_last");
    if (fl.is_string()) {
      const auto mode = fl.get<std::string>();
      if (mode == "auto") {
        r.first_last = FirstLastPolicy::automatic;
      } else if (mode == "none") {
        r.first_last = FirstLastPolicy::none;
      } else {
        throw std::invalid_argument("recipe: first_last must be 'auto', 'none' or an object");
      }
    } else {
      check_keys(fl, {"weight", "activation"}, "first_last");
      r.first_last = FirstLastPolicy::explicit_formats;
      if (fl.contains("weight")) {
        r.first_last_weight = format_or_none(fl.at("weight"));
      }
      if (fl.contains("activation")) {
        r.first_last_activation = format_or_none(fl.at("activation"));
      }
    }
  }
  if (j.contains("cle")) {
    const json& c = j.at("cle");
    check_keys(c, {"enabled", "iters"}, "cle");
    read(c, "enabled", r.cle);
    read(c, "iters", r.cle_iters);
  }
  if (j.contains("smoothquant")) {
    const json& s = j.at("smoothquant");
    check_keys(s, {"enabled", "alpha"}, "smoothquant");
    bool enabled = s.value("enabled", true);
    double alpha = s.value("alpha", 0.5);
    if (alpha < 0.0 || alpha > 1.0) {
      throw std::invalid_argument("recipe: smoothquant.alpha must lie in [0, 1]");
    }
    if (enabled) {
      r.smoothquant_alpha = alpha;
    }
  }
  if (j.contains("bias_correction")) {
    const json& b = j.at("bias_correction");
    check_keys(b, {"enabled"}, "bias_correction");
    read(b, "enabled", r.bias_correction);
  }
  bool learned = false;
  bool gptq = false;
  if (j.contains("learned_rounding")) {
    const json& l = j.at("learned_rounding");
    check_keys(l, {"enabled", "steps", "lr", "lambda", "beta_start", "beta_end", "warmup_frac", "seed"},
               "learned_rounding");
    learned = l.value("enabled", true);
    auto& p = r.learned_rounding;
    read(l, "steps", p.steps);
    read(l, "lr", p.lr);
    read(l, "lambda", p.lambda);
    read(l, "beta_start", p.beta_start);
    read(l, "beta_end", p.beta_end);
    read(l, "warmup_frac", p.warmup_frac);
    read(l, "seed", p.seed);
  }
  if (j.contains("gptq")) {
    const json& g = j.at("gptq");
    check_keys(g, {"enabled", "block_size", "damping"}, "gptq");
    gptq = g.value("enabled", true);
    read(g, "block_size", r.gptq.block_size);
    read(g, "damping", r.gptq.damping);
    if (r.gptq.block_size == 0) {
      throw std::invalid_argument("recipe: gptq.block_size must be positive");
    }
  }
  if (learned && gptq) {
    throw std::invalid_argument("recipe: learned rounding and GPTQ are mutually exclusive");
  }
  r.rounding = learned ? RoundingMethod::learned : gptq ? RoundingMethod::gptq : RoundingMethod::nearest;
  if (j.contains("calibration")) {
    const json& c = j.at("calibration");
    check_keys(c, {"batch_size", "max_samples", "candidates", "iters"}, "calibration");
    read(c, "batch_size", r.calibration.batch_size);
    read(c, "max_samples", r.calibration.max_samples);
    read(c, "candidates", r.calibration.candidates);
    read(c, "iters", r.calibration.iters);
    if (r.calibration.batch_size == 0 || r.calibration.candidates < 2) {
      throw std::invalid_argument("recipe: calibration.batch_size and candidates must be positive");
    }
  }
  return r;
}

json recipe_to_json(const QuantRecipe& r) {
  json j;
  j["weight_format"] = format_json(r.weight_format);
  j["activation_format"] = format_json(r.activation_format);
  j["weight_granularity"] = to_string(r.weight_granularity);
  switch (r.first_last) {
    case FirstLastPolicy::automatic:
      j["first_last"] = "auto";
      break;
    case FirstLastPolicy::none:
      j["first_last"] = "none";
      break;
    case FirstLastPolicy::explicit_formats:
      j["first_last"] = {{"weight", format_json(r.first_last_weight)},
                         {"activation", format_json(r.first_last_activation)}};
      break;
  }
  j["cle"] = {{"enabled", r.cle}, {"iters", r.cle_iters}};
  j["smoothquant"] = {{"enabled", r.smoothquant_alpha.has_value()}, {"alpha", r.smoothquant_alpha.value_or(0.5)}};
  j["bias_correction"] = {{"enabled", r.bias_correction}};
  const auto& l = r.learned_rounding;
  j["learned_rounding"] = {{"enabled", r.rounding == RoundingMethod::learned},
                           {"steps", l.steps},
                           {"lr", l.lr},
                           {"lambda", l.lambda},
                           {"beta_start", l.beta_start},
                           {"beta_end", l.beta_end},
                           {"warmup_frac", l.warmup_frac},
                           {"seed", l.seed}};
  j["gptq"] = {{"enabled", r.rounding == RoundingMethod::gptq},
               {"block_size", r.gptq.block_size},
               {"damping", r.gptq.damping}};
  j["calibration"] = {{"batch_size", r.calibration.batch_size},
                      {"max_samples", r.calibration.max_samples},
                      {"candidates", r.calibration.candidates},
                      {"iters", r.calibration.iters}};
  return j;
}

}  // namespace mfq
