// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mfq/forward.hpp"
#include "mfq/quantizers.hpp"

namespace mfq {

namespace {

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) {
    m = std::max(m, std::fabs(v));
  }
  return m;
}

struct Objective {
  std::span<const double> x;
  const NumericFormat& format;
  double top;
  size_t n;

  double t_of(size_t i) const { return top * static_cast<double>(i) / static_cast<double>(n); }
  double operator()(size_t i) const {
    if (i < 1 || i > n) {
      return std::numeric_limits<double>::infinity();
    }
    return quantization_mse(x, t_of(i), format);
  }
};

}  // namespace

double quantization_mse(std::span<const double> x, double t, const NumericFormat& format) {
  if (x.empty()) {
    return 0.0;
  }
  const double s = t > 0.0 ? t / q_max(format) : zero_range_scale();
  double acc = 0.0;
  for (double v : x) {
    const double d = v - fake_quantize(v, s, format);
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

RangeSearch exhaustive_range_search(std::span<const double> x, const NumericFormat& format, size_t candidates) {
  const Objective f{x, format, max_abs(x), candidates};
  if (!(f.top > 0.0) || candidates == 0) {
    throw std::invalid_argument("range search needs a non-zero sample and at least one candidate");
  }
  RangeSearch r;
  r.mse = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i <= candidates; ++i) {
    const double e = f(i);
    if (e < r.mse) {
      r.mse = e;
      r.index = i;
    }
  }
  r.t = f.t_of(r.index);
  r.baseline_mse = f(candidates);
  return r;
}

RangeSearch fibonacci_range_search(std::span<const double> x, const NumericFormat& format, size_t candidates,
                                   int iters) {
  const Objective f{x, format, max_abs(x), candidates};
  if (!(f.top > 0.0) || candidates == 0) {
    throw std::invalid_argument("range search needs a non-zero sample and at least one candidate");
  }
  // Bracket [lo, lo + fib[k]] covers indices 0..candidates; points outside
  // 1..candidates evaluate to +inf.
  std::vector<size_t> fib{1, 1};
  while (fib.back() < candidates + 1) {
    fib.push_back(fib[fib.size() - 1] + fib[fib.size() - 2]);
  }
  size_t k = fib.size() - 1;
  size_t lo = 0;
  size_t a = lo + fib[k - 2];
  size_t b = lo + fib[k - 1];
  double fa = f(a);
  double fb = f(b);
  for (int it = 0; it < iters && k > 3; ++it) {
    if (fa <= fb) {
      // Minimum lies in [lo, b].
      --k;
      b = a;
      fb = fa;
      a = lo + fib[k - 2];
      fa = f(a);
    } else {
      // Minimum lies in [a, lo + fib[k]].
      lo = a;
      --k;
      a = b;
      fa = fb;
      b = lo + fib[k - 1];
      fb = f(b);
    }
  }
  RangeSearch r;
  r.mse = std::numeric_limits<double>::infinity();
  const auto scan = [&](size_t from, size_t to) {
    for (size_t i = std::max<size_t>(from, 1); i <= std::min(to, candidates); ++i) {
      const double e = f(i);
      if (e < r.mse) {
        r.mse = e;
        r.index = i;
      }
    }
  };
  scan(lo, lo + fib[k]);
  // MSE(t) is jagged near its minimum, so a single bracket can settle in a
  // shallow side basin. A stride-8 coarse pass picks the four best regions
  // and each is rescanned at full resolution.
  constexpr size_t stride = 8;
  constexpr size_t regions = 4;
  if (candidates > stride * regions) {
    std::vector<std::pair<double, size_t>> coarse;
    for (size_t i = stride; i <= candidates; i += stride) {
      coarse.emplace_back(f(i), i);
    }
    std::partial_sort(coarse.begin(), coarse.begin() + regions, coarse.end());
    for (size_t c = 0; c < regions; ++c) {
      const size_t centre = coarse[c].second;
      scan(centre - stride + 1, centre + stride - 1);
    }
  }
  r.baseline_mse = f(candidates);
  if (r.index == 0 || r.mse > r.baseline_mse) {
    RangeSearch full = exhaustive_range_search(x, format, candidates);
    full.fell_back = true;
    return full;
  }
  r.t = f.t_of(r.index);
  return r;
}

CalibRecord calibrate_site(const std::vector<std::vector<double>>& batches, const NumericFormat& format,
                           const CalibrationParams& params) {
  if (batches.empty()) {
    throw std::invalid_argument("calibrate_site needs at least one batch");
  }
  CalibRecord rec;
  for (const auto& batch : batches) {
    const double m = max_abs(batch);
    rec.batch_max.push_back(m);
    if (m > 0.0) {
      rec.batch_t.push_back(fibonacci_range_search(batch, format, params.candidates, params.iters).t);
    }
  }
  if (rec.batch_t.empty()) {
    rec.degenerate = true;
    rec.t = zero_range_scale() * q_max(format);
    return rec;
  }
  rec.t = std::accumulate(rec.batch_t.begin(), rec.batch_t.end(), 0.0) / static_cast<double>(rec.batch_t.size());
  return rec;
}

CalibTable calibrate_graph(const LayerGraph& g, const QuantRecipe& recipe, const Dataset& calib_set,
                           std::vector<CalibRecord>* records) {
  if (calib_set.size() == 0) {
    throw std::invalid_argument("calibration set is empty");
  }
  const auto sites = activation_sites(g, recipe);
  CalibTable table;
  if (sites.empty()) {
    return table;
  }
  const auto& p = recipe.calibration;
  const size_t count = std::min(calib_set.size(), p.max_samples);
  const size_t batch_count = (count + p.batch_size - 1) / p.batch_size;
  // batches[site][batch] holds the concatenated activations of that batch.
  std::vector<std::vector<std::vector<double>>> batches(sites.size(),
                                                        std::vector<std::vector<double>>(batch_count));
  for (size_t n = 0; n < count; ++n) {
    const auto outs = forward_all(g, calib_set.inputs[n]);
    for (size_t s = 0; s < sites.size(); ++s) {
      const auto v = outs[sites[s].node].data();
      auto& dst = batches[s][n / p.batch_size];
      dst.insert(dst.end(), v.begin(), v.end());
    }
  }
  for (size_t s = 0; s < sites.size(); ++s) {
    CalibRecord rec = calibrate_site(batches[s], sites[s].format, p);
    rec.site = sites[s].name;
    CalibEntry e;
    e.t = rec.t;
    e.s = rec.t / q_max(sites[s].format);
    e.format = sites[s].format;
    e.degenerate = rec.degenerate;
    table[rec.site] = e;
    if (records) {
      records->push_back(std::move(rec));
    }
  }
  return table;
}

}  // namespace mfq
