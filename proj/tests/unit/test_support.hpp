// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit and acceptance tests: random graphs, an
// independent loop-based forward pass, and a brute-force grid projection.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mfq/dataset.hpp"
#include "mfq/formats.hpp"
#include "mfq/graph.hpp"
#include "mfq/random.hpp"
#include "mfq/tensor.hpp"

namespace mfq::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    v = scale * rng.normal();
  }
  return t;
}

inline Tensor random_nonneg(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    v = scale * std::fabs(rng.normal());
  }
  return t;
}

inline LinearOp random_linear(Rng& rng, size_t in, size_t out, double spread = 1.0) {
  LinearOp op{random_tensor(rng, {out, in}), random_tensor(rng, {out}, 0.1)};
  // Uneven per-row magnitudes give equalization something to do.
  for (size_t r = 0; r < out; ++r) {
    const double k = std::exp(spread * rng.normal());
    for (size_t c = 0; c < in; ++c) {
      op.weight[r * in + c] *= k / std::sqrt(static_cast<double>(in));
    }
  }
  return op;
}

/// Linear -> ReLU -> ... -> Linear with the given widths.
inline LayerGraph random_mlp(Rng& rng, const std::vector<size_t>& widths, double spread = 1.0) {
  LayerGraph g;
  size_t prev = g.add_input("input", {widths.front()});
  for (size_t i = 1; i < widths.size(); ++i) {
    prev = g.add("fc" + std::to_string(i), random_linear(rng, widths[i - 1], widths[i], spread), {prev});
    if (i + 1 < widths.size()) {
      prev = g.add("relu" + std::to_string(i), ReluOp{}, {prev});
    }
  }
  g.set_output(prev);
  return g;
}

inline Conv2dOp random_conv(Rng& rng, size_t ci, size_t co, size_t k, size_t stride, size_t pad, size_t groups,
                            double spread = 1.0) {
  const size_t fan_in = ci / groups * k * k;
  Conv2dOp op;
  op.weight = random_tensor(rng, {co, ci / groups, k, k});
  op.bias = random_tensor(rng, {co}, 0.1);
  op.stride = stride;
  op.padding = pad;
  op.groups = groups;
  for (size_t o = 0; o < co; ++o) {
    const double scale = std::exp(spread * rng.normal()) / std::sqrt(static_cast<double>(fan_in));
    for (size_t i = 0; i < fan_in; ++i) {
      op.weight[o * fan_in + i] *= scale;
    }
  }
  return op;
}

/// conv -> relu -> conv(stride 2) -> relu -> grouped conv -> relu -> add ->
/// pool -> fc: the same topology as the blob fixture, with random weights.
inline LayerGraph random_cnn(Rng& rng, size_t c1 = 4, size_t c2 = 8, size_t groups = 2, double spread = 1.0) {
  LayerGraph g;
  const size_t in = g.add_input("input", {1, 6, 6});
  const size_t conv1 = g.add("conv1", random_conv(rng, 1, c1, 3, 1, 1, 1, spread), {in});
  const size_t relu1 = g.add("relu1", ReluOp{}, {conv1});
  const size_t conv2 = g.add("conv2", random_conv(rng, c1, c2, 3, 2, 1, 1, spread), {relu1});
  const size_t relu2 = g.add("relu2", ReluOp{}, {conv2});
  const size_t conv3 = g.add("conv3", random_conv(rng, c2, c2, 3, 1, 1, groups, spread), {relu2});
  const size_t relu3 = g.add("relu3", ReluOp{}, {conv3});
  const size_t add = g.add("add", AddOp{}, {relu2, relu3});
  const size_t pool = g.add("pool", GlobalAvgPoolOp{}, {add});
  const size_t fc = g.add("fc", random_linear(rng, c2, 3, spread), {pool});
  g.set_output(fc);
  return g;
}

inline Dataset random_dataset(Rng& rng, const Shape& shape, size_t count, uint32_t classes = 3) {
  Dataset d;
  for (size_t i = 0; i < count; ++i) {
    d.push_back(random_tensor(rng, shape), static_cast<uint32_t>(rng.below(classes)));
  }
  return d;
}

// ---- loop-based reference forward pass --------------------------------

inline Tensor naive_linear(const LinearOp& op, const Tensor& x) {
  const size_t out = op.weight.dim(0);
  const size_t in = op.weight.dim(1);
  Tensor y({out});
  for (size_t o = 0; o < out; ++o) {
    long double acc = op.bias[o];
    for (size_t i = 0; i < in; ++i) {
      acc += static_cast<long double>(op.weight[o * in + i]) * x[i];
    }
    y[o] = static_cast<double>(acc);
  }
  return y;
}

inline Tensor naive_conv(const Conv2dOp& op, const Tensor& x) {
  const size_t h = x.dim(1), w = x.dim(2);
  const size_t co = op.weight.dim(0), cig = op.weight.dim(1), kh = op.weight.dim(2), kw = op.weight.dim(3);
  const size_t oh = (h + 2 * op.padding - kh) / op.stride + 1;
  const size_t ow = (w + 2 * op.padding - kw) / op.stride + 1;
  const size_t cog = co / op.groups;
  Tensor y({co, oh, ow});
  for (size_t o = 0; o < co; ++o) {
    const size_t g = o / cog;
    for (size_t yy = 0; yy < oh; ++yy) {
      for (size_t xx = 0; xx < ow; ++xx) {
        long double acc = op.bias[o];
        for (size_t c = 0; c < cig; ++c) {
          const size_t cin = g * cig + c;
          for (size_t ky = 0; ky < kh; ++ky) {
            for (size_t kx = 0; kx < kw; ++kx) {
              const long long iy = static_cast<long long>(yy * op.stride + ky) - static_cast<long long>(op.padding);
              const long long ix = static_cast<long long>(xx * op.stride + kx) - static_cast<long long>(op.padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(h) || ix >= static_cast<long long>(w)) {
                continue;
              }
              acc += static_cast<long double>(op.weight[((o * cig + c) * kh + ky) * kw + kx]) *
                     x[(cin * h + static_cast<size_t>(iy)) * w + static_cast<size_t>(ix)];
            }
          }
        }
        y[(o * oh + yy) * ow + xx] = static_cast<double>(acc);
      }
    }
  }
  return y;
}

inline Tensor naive_forward(const LayerGraph& g, const Tensor& x) {
  std::vector<Tensor> v(g.size());
  for (size_t id = 0; id < g.size(); ++id) {
    const Node& n = g.node(id);
    if (std::holds_alternative<InputOp>(n.op)) {
      v[id] = x;
    } else if (const auto* l = std::get_if<LinearOp>(&n.op)) {
      v[id] = naive_linear(*l, v[n.inputs[0]]);
    } else if (const auto* c = std::get_if<Conv2dOp>(&n.op)) {
      v[id] = naive_conv(*c, v[n.inputs[0]]);
    } else if (std::holds_alternative<ReluOp>(n.op)) {
      v[id] = v[n.inputs[0]];
      for (double& e : v[id].data()) {
        e = e > 0.0 ? e : 0.0;
      }
    } else if (std::holds_alternative<AddOp>(n.op)) {
      v[id] = v[n.inputs[0]];
      for (size_t i = 0; i < v[id].size(); ++i) {
        v[id][i] += v[n.inputs[1]][i];
      }
    } else if (std::holds_alternative<GlobalAvgPoolOp>(n.op)) {
      const Tensor& a = v[n.inputs[0]];
      const size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
      v[id] = Tensor({c});
      for (size_t k = 0; k < c; ++k) {
        double s = 0.0;
        for (size_t i = 0; i < hw; ++i) {
          s += a[k * hw + i];
        }
        v[id][k] = s / static_cast<double>(hw);
      }
    } else if (std::holds_alternative<FlattenOp>(n.op)) {
      v[id] = v[n.inputs[0]].reshaped({v[n.inputs[0]].size()});
    } else if (const auto* cs = std::get_if<ChannelScaleOp>(&n.op)) {
      const Tensor& a = v[n.inputs[0]];
      v[id] = a;
      const size_t per = a.size() / a.dim(0);
      for (size_t i = 0; i < a.size(); ++i) {
        v[id][i] *= cs->scale[i / per];
      }
    }
  }
  return v[g.output_id()];
}

inline double max_rel_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  const double scale = std::max({a.max_abs(), b.max_abs(), 1e-300});
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

// ---- brute-force grid projection ---------------------------------------

/// Nearest element of the sorted grid; exact ties go to the value whose
/// mantissa field is even, values beyond the range saturate.
inline double brute_nearest(const std::vector<double>& grid, const MinifloatFormat& f, double x) {
  if (x >= grid.back()) {
    return grid.back();
  }
  if (x <= grid.front()) {
    return grid.front();
  }
  const auto hi = std::lower_bound(grid.begin(), grid.end(), x);
  if (*hi == x) {
    return x;
  }
  const double a = *(hi - 1);
  const double b = *hi;
  const double da = x - a;
  const double db = b - x;
  if (da < db) {
    return a;
  }
  if (db < da) {
    return b;
  }
  return (unpack(f, encode(f, a)).mantissa % 2 == 0) ? a : b;
}

/// All minifloat formats with total width in [lo, hi] and default bias.
inline std::vector<MinifloatFormat> minifloat_formats(int lo, int hi) {
  std::vector<MinifloatFormat> out;
  for (int r = lo; r <= hi; ++r) {
    for (int e = 1; e <= r - 2; ++e) {
      out.emplace_back(e, r - 1 - e);
    }
  }
  return out;
}

}  // namespace mfq::testing
