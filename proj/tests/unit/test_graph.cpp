// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "mfq/errors.hpp"
#include "mfq/forward.hpp"
#include "mfq/quantizers.hpp"
#include "mfq/sites.hpp"
#include "test_support.hpp"

using namespace mfq;

namespace {

LayerGraph scalar_linear(double w, double b) {
  LayerGraph g;
  const size_t in = g.add_input("input", {1});
  g.set_output(g.add("fc", LinearOp{Tensor({1, 1}, {w}), Tensor({1}, {b})}, {in}));
  return g;
}

QuantRecipe int_recipe(int bits) {
  QuantRecipe r;
  r.weight_format = IntFormat(bits);
  r.activation_format = IntFormat(bits);
  r.first_last = FirstLastPolicy::none;
  return r;
}

}  // namespace

TEST_CASE("scalar linear layer") {
  const auto g = scalar_linear(2.0, 0.0);
  CHECK(forward(g, Tensor({1}, {3.0}))[0] == 6.0);
}

TEST_CASE("identity kernel convolution leaves the input unchanged") {
  LayerGraph g;
  const size_t in = g.add_input("input", {1, 5, 5});
  Conv2dOp op;
  op.weight = Tensor({1, 1, 3, 3}, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  op.bias = Tensor({1}, 0.0);
  op.padding = 1;
  g.set_output(g.add("conv", op, {in}));
  Rng rng(1);
  const Tensor x = testing::random_tensor(rng, {1, 5, 5});
  CHECK(forward(g, x) == x);
}

TEST_CASE("forward matches the loop-based oracle on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<size_t> widths{1 + rng.below(6)};
    const size_t depth = 1 + rng.below(4);
    for (size_t i = 0; i < depth; ++i) {
      widths.push_back(1 + rng.below(7));
    }
    const auto mlp = testing::random_mlp(rng, widths);
    const Tensor x = testing::random_tensor(rng, {widths.front()});
    CHECK(testing::max_rel_diff(forward(mlp, x), testing::naive_forward(mlp, x)) < 1e-10);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const auto cnn = testing::random_cnn(rng, 2 + 2 * rng.below(3), 4 + 4 * rng.below(2), 2);
    const Tensor x = testing::random_tensor(rng, {1, 6, 6});
    CHECK(testing::max_rel_diff(forward(cnn, x), testing::naive_forward(cnn, x)) < 1e-10);
  }
}

TEST_CASE("shape inference") {
  Rng rng(3);
  const auto cnn = testing::random_cnn(rng);
  const auto shapes = cnn.infer_shapes();
  CHECK(shapes[cnn.find("conv2")] == Shape{8, 3, 3});
  CHECK(shapes[cnn.output_id()] == Shape{3});
  CHECK_THROWS_AS(forward(cnn, Tensor({1, 5, 5})), std::invalid_argument);

  LayerGraph bad;
  const size_t in = bad.add_input("input", {3});
  bad.set_output(bad.add("fc", LinearOp{Tensor({2, 4}), Tensor({2})}, {in}));
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad.add("late", ReluOp{}, {7}), std::invalid_argument);
  CHECK_THROWS_AS(bad.find("nope"), std::out_of_range);
}

TEST_CASE("im2col columns reproduce the convolution") {
  Rng rng(4);
  const Conv2dOp op = testing::random_conv(rng, 4, 6, 3, 2, 1, 2);
  const Tensor x = testing::random_tensor(rng, {4, 5, 5});
  const Tensor want = testing::naive_conv(op, x);
  LayerGraph g;
  const size_t in = g.add_input("input", {4, 5, 5});
  g.set_output(g.add("conv", op, {in}));
  const Node& layer = g.node(1);
  for (size_t grp = 0; grp < 2; ++grp) {
    const Eigen::MatrixXd cols = im2col(x, op, grp);
    CHECK(cols.rows() == 2 * 9);
    CHECK(cols.cols() == 9);
    const Eigen::MatrixXd y = group_weight(layer, grp) * cols;
    for (Eigen::Index o = 0; o < y.rows(); ++o) {
      for (Eigen::Index p = 0; p < y.cols(); ++p) {
        const size_t ch = grp * 3 + static_cast<size_t>(o);
        CHECK(y(o, p) + op.bias[ch] == doctest::Approx(want[ch * 9 + static_cast<size_t>(p)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("group weight round trip") {
  Rng rng(8);
  LayerGraph g;
  const size_t in = g.add_input("input", {4, 4, 4});
  g.set_output(g.add("conv", testing::random_conv(rng, 4, 4, 3, 1, 1, 2), {in}));
  Node& layer = g.node(1);
  const Tensor before = std::get<Conv2dOp>(layer.op).weight;
  for (size_t grp = 0; grp < layer_groups(layer); ++grp) {
    set_group_weight(layer, grp, group_weight(layer, grp));
  }
  CHECK(std::get<Conv2dOp>(layer.op).weight == before);
}

TEST_CASE("activation sites") {
  LayerGraph one = scalar_linear(1.0, 0.0);
  const auto sites = activation_sites(one, int_recipe(8));
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].name == "input");
  CHECK(sites[1].name == "fc");

  Rng rng(5);
  const auto cnn = testing::random_cnn(rng);
  QuantRecipe r = int_recipe(4);
  r.first_last = FirstLastPolicy::automatic;
  std::vector<std::string> names;
  for (const auto& s : activation_sites(cnn, r)) {
    names.push_back(s.name + ":" + to_string(s.format));
  }
  // Inputs of layers, the residual sum and the output; first/last layer
  // neighbours get the int8 override.
  CHECK(names ==
        std::vector<std::string>{"input:int8", "relu1:int4", "relu2:int4", "add:int4", "pool:int8", "fc:int8"});
  CHECK(weight_format_for(cnn, r, cnn.find("conv1")) == std::optional<NumericFormat>(IntFormat(8)));
  CHECK(weight_format_for(cnn, r, cnn.find("conv2")) == std::optional<NumericFormat>(IntFormat(4)));

  QuantRecipe fp;
  fp.weight_format = MinifloatFormat(2, 1);
  fp.activation_format = MinifloatFormat(2, 1);
  CHECK(weight_format_for(cnn, fp, cnn.find("fc")) == std::optional<NumericFormat>(MinifloatFormat(3, 4)));
}

TEST_CASE("forward_quantized without formats equals forward") {
  Rng rng(6);
  const auto cnn = testing::random_cnn(rng);
  const Tensor x = testing::random_tensor(rng, {1, 6, 6});
  CHECK(forward_quantized(cnn, QuantRecipe{}, {}, x) == forward(cnn, x));
}

TEST_CASE("forward_quantized on a 2x2 linear layer by hand") {
  // Weights already on the int4 grid with s = 0.25; input site s = 0.5.
  LayerGraph g;
  const size_t in = g.add_input("input", {2});
  g.set_output(g.add("fc", LinearOp{Tensor({2, 2}, {0.25, -0.5, 1.75, 0.0}), Tensor({2}, {0.0, 0.0})}, {in}));
  QuantRecipe r = int_recipe(4);
  r.activation_format = IntFormat(4);
  CalibTable calib;
  calib["input"] = {3.5, 0.5, IntFormat(4), false};
  calib["fc"] = {7.0, 1.0, IntFormat(4), false};
  const Tensor x({2}, {1.3, -0.6});
  // x_hat = 0.5 * round([2.6, -1.2]) = [1.5, -0.5]
  const double y0 = 0.25 * 1.5 + -0.5 * -0.5;  // 0.625 -> output site, s = 1 -> 1
  const double y1 = 1.75 * 1.5;                // 2.625 -> 3
  const Tensor y = forward_quantized(g, r, calib, x);
  CHECK(y0 == 0.625);
  CHECK(y[0] == 1.0);
  CHECK(y1 == 2.625);
  CHECK(y[1] == 3.0);
}

TEST_CASE("wide minifloat formats are nearly the identity") {
  Rng rng(7);
  const auto cnn = testing::random_cnn(rng);
  QuantRecipe r;
  r.activation_format = MinifloatFormat(4, 11);
  r.first_last = FirstLastPolicy::none;
  for (int i = 0; i < 10; ++i) {
    const Tensor x = testing::random_tensor(rng, {1, 6, 6});
    const auto all = forward_all(cnn, x);
    CalibTable calib;
    for (const auto& site : activation_sites(cnn, r)) {
      const double t = all[site.node].max_abs();
      calib[site.name] = {t, t / q_max(site.format), site.format, false};
    }
    CHECK(testing::max_rel_diff(forward_quantized(cnn, r, calib, x), forward(cnn, x)) < 1e-3);
  }
}

TEST_CASE("missing or mismatched calibration entries are configuration errors") {
  const auto g = scalar_linear(1.0, 0.0);
  const QuantRecipe r = int_recipe(8);
  CalibTable calib;
  calib["input"] = {1.0, 1.0 / 127, IntFormat(8), false};
  CHECK_THROWS_AS(forward_quantized(g, r, calib, Tensor({1}, {0.5})), ConfigError);
  calib["fc"] = {1.0, 1.0 / 7, IntFormat(4), false};
  CHECK_THROWS_AS(forward_quantized(g, r, calib, Tensor({1}, {0.5})), ConfigError);
  calib["fc"] = {1.0, 0.0, IntFormat(8), false};
  CHECK_THROWS_AS(forward_quantized(g, r, calib, Tensor({1}, {0.5})), ConfigError);
}

TEST_CASE("accuracy") {
  // Identity classifier on one-hot inputs is perfect.
  LayerGraph g;
  const size_t in = g.add_input("input", {3});
  g.set_output(g.add("fc", LinearOp{Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}), Tensor({3})}, {in}));
  Dataset d;
  for (uint32_t c = 0; c < 3; ++c) {
    Tensor x({3});
    x[c] = 1.0;
    d.push_back(x, c);
  }
  CHECK(accuracy(g, d) == 1.0);
  CHECK_THROWS_AS(accuracy(g, Dataset{}), std::invalid_argument);

  // Random labels give about 1/C.
  Rng rng(12);
  Dataset noisy;
  const size_t n = 6000;
  for (size_t i = 0; i < n; ++i) {
    noisy.push_back(testing::random_tensor(rng, {3}), static_cast<uint32_t>(rng.below(3)));
  }
  const double p = 1.0 / 3.0;
  CHECK(std::fabs(accuracy(g, noisy) - p) < 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("argmax takes the first maximum") { CHECK(argmax(Tensor({4}, {1, 3, 3, 0})) == 1); }

TEST_CASE("insert_before keeps the function when the op is the identity") {
  Rng rng(13);
  auto g = testing::random_mlp(rng, {3, 4, 2});
  const Tensor x = testing::random_tensor(rng, {3});
  const Tensor before = forward(g, x);
  const size_t fc2 = g.find("fc2");
  g.insert_before(fc2, 0, "fc2.scale", ChannelScaleOp{{1.0, 1.0, 1.0, 1.0}});
  CHECK(g.node(g.find("fc2")).inputs[0] == g.find("fc2.scale"));
  CHECK(forward(g, x) == before);
}
