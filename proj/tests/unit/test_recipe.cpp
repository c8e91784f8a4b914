// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mfq/errors.hpp"
#include "mfq/recipe.hpp"
#include "mfq/sites.hpp"

using namespace mfq;
using nlohmann::json;

TEST_CASE("recipe defaults") {
  const QuantRecipe r = recipe_from_json(json::object());
  CHECK_FALSE(r.weight_format);
  CHECK_FALSE(r.activation_format);
  CHECK(r.weight_granularity == Granularity::per_channel);
  CHECK(r.first_last == FirstLastPolicy::automatic);
  CHECK(r.rounding == RoundingMethod::nearest);
  CHECK(r.learned_rounding.steps == 1000);
  CHECK(r.learned_rounding.lambda == 0.01);
  CHECK(r.learned_rounding.beta_start == 20.0);
  CHECK(r.learned_rounding.beta_end == 2.0);
  CHECK(r.gptq.block_size == 32);
  CHECK(r.gptq.damping == 0.01);
  CHECK(r.calibration.batch_size == 32);
  CHECK(r.calibration.max_samples == 1000);
  CHECK(r.methods_tag() == "rtn");
}

TEST_CASE("recipe parsing and round trip") {
  const json j = json::parse(R"({
    "weight_format": "e2m1", "activation_format": "e3m4", "weight_granularity": "per_tensor",
    "first_last": {"weight": "int8", "activation": "none"},
    "cle": {"enabled": true, "iters": 4},
    "smoothquant": {"alpha": 0.75},
    "bias_correction": {"enabled": true},
    "gptq": {"block_size": 8},
    "calibration": {"batch_size": 16}
  })");
  const QuantRecipe r = recipe_from_json(j);
  CHECK(r.weight_format == std::optional<NumericFormat>(MinifloatFormat(2, 1)));
  CHECK(r.weight_granularity == Granularity::per_tensor);
  CHECK(r.first_last == FirstLastPolicy::explicit_formats);
  CHECK(r.override_weight_format() == std::optional<NumericFormat>(IntFormat(8)));
  CHECK_FALSE(r.override_activation_format());
  CHECK(r.cle_iters == 4);
  CHECK(r.smoothquant_alpha == 0.75);
  CHECK(r.rounding == RoundingMethod::gptq);
  CHECK(r.gptq.block_size == 8);
  CHECK(r.calibration.batch_size == 16);
  CHECK(r.methods_tag() == "cle+sq+bc+gptq");

  const QuantRecipe back = recipe_from_json(recipe_to_json(r));
  CHECK(recipe_to_json(back) == recipe_to_json(r));
}

TEST_CASE("first/last defaults depend on the body format") {
  QuantRecipe r;
  CHECK_FALSE(r.override_weight_format());
  r.weight_format = IntFormat(4);
  r.activation_format = IntFormat(4);
  CHECK(r.override_weight_format() == std::optional<NumericFormat>(IntFormat(8)));
  r.weight_format = MinifloatFormat(2, 1);
  r.activation_format = MinifloatFormat(2, 1);
  CHECK(r.override_activation_format() == std::optional<NumericFormat>(MinifloatFormat(3, 4)));
  r.first_last = FirstLastPolicy::none;
  CHECK_FALSE(r.override_weight_format());
}

TEST_CASE("recipe errors") {
  CHECK_THROWS_AS(recipe_from_json(json{{"colour", "red"}}), std::invalid_argument);
  CHECK_THROWS_AS(recipe_from_json(json{{"weight_format", "int1"}}), std::invalid_argument);
  CHECK_THROWS_AS(recipe_from_json(json::parse(R"({"learned_rounding": {}, "gptq": {}})")), std::invalid_argument);
  CHECK_THROWS_AS(recipe_from_json(json::parse(R"({"gptq": {"block_size": 0}})")), std::invalid_argument);
  CHECK_THROWS_AS(recipe_from_json(json::parse(R"({"cle": {"on": true}})")), std::invalid_argument);
  CHECK_THROWS_AS(recipe_from_json(json::parse(R"({"first_last": "sometimes"})")), std::invalid_argument);
  CHECK(recipe_from_json(json::parse(R"({"learned_rounding": {"enabled": false}, "gptq": {}})")).rounding ==
        RoundingMethod::gptq);
}

TEST_CASE("calibration table JSON") {
  CalibTable t;
  t["input"] = {2.0, 2.0 / 127, IntFormat(8), false};
  t["relu"] = {1e-300, 1e-302, MinifloatFormat(2, 1), true};
  const CalibTable back = calib_from_json(calib_to_json(t));
  REQUIRE(back.size() == 2);
  CHECK(back.at("input").s == t.at("input").s);
  CHECK(back.at("relu").format == NumericFormat(MinifloatFormat(2, 1)));
  CHECK(back.at("relu").degenerate);
  CHECK_THROWS_AS(calib_from_json(json::array()), ConfigError);
}
