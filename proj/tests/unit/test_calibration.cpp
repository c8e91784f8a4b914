// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mfq/calibration.hpp"
#include "mfq/forward.hpp"
#include "mfq/quantizers.hpp"
#include "test_support.hpp"

using namespace mfq;

namespace {

std::vector<double> normals(Rng& rng, size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = scale * rng.normal();
  }
  return v;
}

// Independent scan: MSE recomputed here from fake_quantize for every t_i.
std::pair<double, double> scan_oracle(const std::vector<double>& x, const NumericFormat& f, size_t n) {
  double top = 0.0;
  for (double v : x) {
    top = std::max(top, std::fabs(v));
  }
  double best_t = 0.0;
  double best = INFINITY;
  for (size_t i = 1; i <= n; ++i) {
    const double t = top * static_cast<double>(i) / static_cast<double>(n);
    double acc = 0.0;
    for (double v : x) {
      const double d = v - fake_quantize(v, t / q_max(f), f);
      acc += d * d;
    }
    acc /= static_cast<double>(x.size());
    if (acc < best) {
      best = acc;
      best_t = t;
    }
  }
  return {best_t, best};
}

}  // namespace

TEST_CASE("data already on an int4 grid calibrates to its maximum") {
  std::vector<double> x;
  for (int c = -7; c <= 7; ++c) {
    x.push_back(0.25 * c);
  }
  const auto r = fibonacci_range_search(x, IntFormat(4));
  CHECK(r.t == 1.75);
  CHECK(r.mse == 0.0);
}

TEST_CASE("a lone outlier is kept at 1000 samples and clipped at 100000") {
  // Covering the outlier at int4 zeroes the bulk (MSE about 1); clipping it
  // costs (100 - t)^2 / N. With N = 1000 covering wins.
  Rng rng(1);
  auto small = normals(rng, 999);
  small.push_back(100.0);
  const auto kept = fibonacci_range_search(small, IntFormat(4));
  CHECK(kept.t == scan_oracle(small, IntFormat(4), 512).first);
  CHECK(kept.t == 100.0);

  auto large = normals(rng, 99999);
  large.push_back(100.0);
  const auto clipped = fibonacci_range_search(large, IntFormat(4));
  CHECK(clipped.t < 10.0);
  CHECK(std::fabs(clipped.t - scan_oracle(large, IntFormat(4), 512).first) <= 100.0 / 512 + 1e-12);
  CHECK(clipped.mse < clipped.baseline_mse);
}

TEST_CASE("Fibonacci search agrees with the exhaustive scan") {
  Rng rng(2);
  const std::vector<NumericFormat> formats{IntFormat(3), IntFormat(4), IntFormat(8), MinifloatFormat(2, 1),
                                           MinifloatFormat(3, 4), MinifloatFormat(4, 3)};
  for (const auto& f : formats) {
    CAPTURE(to_string(f));
    for (int i = 0; i < 40; ++i) {
      const double scale = std::exp(rng.normal());
      auto x = normals(rng, 256, scale);
      if (i % 3 == 0) {
        x[0] = 30.0 * scale;  // heavy tail
      }
      const auto fib = fibonacci_range_search(x, f);
      const double t_scan = scan_oracle(x, f, 512).first;
      double top = 0.0;
      for (double v : x) {
        top = std::max(top, std::fabs(v));
      }
      CHECK(std::fabs(fib.t - t_scan) <= top / 512.0 * (1 + 1e-9));
      CHECK(fib.mse <= fib.baseline_mse + 1e-12);
    }
  }
}

TEST_CASE("exhaustive search matches the oracle exactly") {
  Rng rng(3);
  const auto x = normals(rng, 300);
  const auto r = exhaustive_range_search(x, IntFormat(4));
  const auto [t, mse] = scan_oracle(x, IntFormat(4), 512);
  CHECK(r.t == t);
  CHECK(r.mse == mse);
  CHECK_THROWS_AS(exhaustive_range_search(std::vector<double>(4, 0.0), IntFormat(4)), std::invalid_argument);
}

TEST_CASE("calibrate_site averages per-batch optima") {
  Rng rng(4);
  const std::vector<std::vector<double>> batches{normals(rng, 64), normals(rng, 64, 2.0), normals(rng, 64, 0.5)};
  const auto rec = calibrate_site(batches, IntFormat(4));
  REQUIRE(rec.batch_t.size() == 3);
  double mean = 0.0;
  for (size_t b = 0; b < 3; ++b) {
    CHECK(rec.batch_t[b] == fibonacci_range_search(batches[b], IntFormat(4)).t);
    CHECK(rec.batch_t[b] <= rec.batch_max[b]);
    mean += rec.batch_t[b] / 3.0;
  }
  CHECK(rec.t == doctest::Approx(mean).epsilon(1e-15));
  CHECK(rec.t > 0.0);
  CHECK(rec.t <= *std::max_element(rec.batch_max.begin(), rec.batch_max.end()));
  CHECK_FALSE(rec.degenerate);
}

TEST_CASE("all-zero activations calibrate to a tiny range with a flag") {
  const auto rec = calibrate_site({std::vector<double>(10, 0.0)}, IntFormat(8));
  CHECK(rec.degenerate);
  CHECK(rec.t > 0.0);
  CHECK(rec.t < 1e-300);
  CHECK_THROWS_AS(calibrate_site({}, IntFormat(8)), std::invalid_argument);
}

TEST_CASE("calibrate_graph") {
  SUBCASE("one linear layer has two sites") {
    LayerGraph g;
    const size_t in = g.add_input("input", {2});
    g.set_output(g.add("fc", LinearOp{Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})}, {in}));
    QuantRecipe r;
    r.activation_format = IntFormat(8);
    Rng rng(5);
    const auto table = calibrate_graph(g, r, testing::random_dataset(rng, {2}, 40));
    CHECK(table.size() == 2);
    CHECK(table.count("input") == 1);
    CHECK(table.count("fc") == 1);
  }
  SUBCASE("deterministic and within the observed envelope") {
    Rng rng(6);
    const auto g = testing::random_cnn(rng);
    const auto data = testing::random_dataset(rng, {1, 6, 6}, 96);
    QuantRecipe r;
    r.activation_format = IntFormat(4);
    r.first_last = FirstLastPolicy::none;
    std::vector<CalibRecord> recs;
    const auto a = calibrate_graph(g, r, data, &recs);
    const auto b = calibrate_graph(g, r, data);
    REQUIRE(a.size() == b.size());
    for (const auto& [name, e] : a) {
      CHECK(b.at(name).t == e.t);
      CHECK(e.s == e.t / 7.0);
    }
    REQUIRE(recs.size() == a.size());
    for (const auto& rec : recs) {
      CHECK(rec.batch_t.size() == 3);  // 96 samples / 32
      // Median of the observed |x| per site as the lower envelope.
      std::vector<double> mags;
      for (size_t n = 0; n < data.size(); ++n) {
        const auto outs = forward_all(g, data.inputs[n]);
        for (double v : outs[g.find(rec.site)].data()) {
          mags.push_back(std::fabs(v));
        }
      }
      std::sort(mags.begin(), mags.end());
      CAPTURE(rec.site);
      CHECK(rec.t >= mags[mags.size() / 2]);
      CHECK(rec.t <= mags.back());
    }
  }
  CHECK_THROWS_AS(calibrate_graph(LayerGraph{}, QuantRecipe{}, Dataset{}), std::invalid_argument);
}
