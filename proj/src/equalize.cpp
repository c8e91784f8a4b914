// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/equalize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mfq/forward.hpp"

namespace mfq {

namespace {

bool rescales_channelwise(const LayerGraph& g, const std::vector<Shape>& shapes, size_t id) {
  const Op& op = g.node(id).op;
  if (std::holds_alternative<ReluOp>(op) || std::holds_alternative<AddOp>(op) ||
      std::holds_alternative<GlobalAvgPoolOp>(op) || std::holds_alternative<ChannelScaleOp>(op)) {
    return true;
  }
  return std::holds_alternative<FlattenOp>(op) && shapes[g.node(id).inputs[0]].size() == 1;
}

Tensor& weight_of(Node& n) {
  if (auto* c = std::get_if<Conv2dOp>(&n.op)) {
    return c->weight;
  }
  return std::get<LinearOp>(n.op).weight;
}

const Tensor& weight_of(const Node& n) {
  if (const auto* c = std::get_if<Conv2dOp>(&n.op)) {
    return c->weight;
  }
  return std::get<LinearOp>(n.op).weight;
}

Tensor& bias_of(Node& n) {
  if (auto* c = std::get_if<Conv2dOp>(&n.op)) {
    return c->bias;
  }
  return std::get<LinearOp>(n.op).bias;
}

const Tensor& bias_of(const Node& n) {
  if (const auto* c = std::get_if<Conv2dOp>(&n.op)) {
    return c->bias;
  }
  return std::get<LinearOp>(n.op).bias;
}

// Calls fn(flat weight index, input channel) for every weight of the layer.
template <typename Fn>
void for_each_in_channel(const Node& layer, Fn&& fn) {
  const Tensor& w = weight_of(layer);
  const size_t co = w.dim(0);
  const size_t groups = layer_groups(layer);
  const size_t cog = co / groups;
  const size_t cig = w.dim(1);
  const size_t taps = w.size() / (co * cig);
  size_t i = 0;
  for (size_t o = 0; o < co; ++o) {
    const size_t base = (o / cog) * cig;
    for (size_t c = 0; c < cig; ++c) {
      for (size_t t = 0; t < taps; ++t, ++i) {
        fn(i, base + c);
      }
    }
  }
}

}  // namespace

std::vector<ScalingGroup> find_scaling_groups(const LayerGraph& g) {
  const auto shapes = g.infer_shapes();
  const size_t out = g.output_id();
  std::vector<ScalingGroup> groups;
  std::set<size_t> claimed;
  for (size_t start : g.layer_ids()) {
    if (claimed.count(start)) {
      continue;
    }
    std::set<size_t> region{start};
    std::set<size_t> sources{start};
    std::set<size_t> sinks;
    std::vector<size_t> work{start};
    bool valid = true;
    while (!work.empty()) {
      const size_t n = work.back();
      work.pop_back();
      if (n == out) {
        valid = false;
      }
      for (size_t c : g.consumers(n)) {
        if (is_layer(g.node(c))) {
          sinks.insert(c);
        } else if (rescales_channelwise(g, shapes, c)) {
          if (region.insert(c).second) {
            work.push_back(c);
          }
        } else {
          valid = false;
        }
      }
      if (is_layer(g.node(n))) {
        continue;
      }
      for (size_t in : g.node(n).inputs) {
        if (region.count(in)) {
          continue;
        }
        if (is_layer(g.node(in))) {
          sources.insert(in);
        } else if (!rescales_channelwise(g, shapes, in)) {
          valid = false;
          continue;
        }
        region.insert(in);
        work.push_back(in);
      }
    }
    claimed.insert(sources.begin(), sources.end());
    const size_t channels = layer_out_channels(g.node(start));
    valid = valid && !sinks.empty();
    for (size_t s : sources) {
      // A layer may be both: W_oi k_i / k_o still preserves the function.
      valid = valid && layer_out_channels(g.node(s)) == channels;
    }
    for (size_t s : sinks) {
      valid = valid && layer_in_channels(g.node(s)) == channels;
    }
    for (size_t n : region) {
      valid = valid && !shapes[n].empty() && shapes[n][0] == channels;
    }
    if (valid) {
      groups.push_back({{sources.begin(), sources.end()}, {sinks.begin(), sinks.end()}, channels});
    }
  }
  return groups;
}

const ScalingGroup* group_feeding(const std::vector<ScalingGroup>& groups, size_t layer) {
  for (const auto& grp : groups) {
    if (std::find(grp.sinks.begin(), grp.sinks.end(), layer) != grp.sinks.end()) {
      return &grp;
    }
  }
  return nullptr;
}

std::vector<double> out_channel_max(const Node& layer) {
  const Tensor& w = weight_of(layer);
  const size_t co = w.dim(0);
  const size_t per = w.size() / co;
  std::vector<double> r(co, 0.0);
  for (size_t i = 0; i < w.size(); ++i) {
    r[i / per] = std::max(r[i / per], std::fabs(w[i]));
  }
  return r;
}

std::vector<double> in_channel_max(const Node& layer) {
  std::vector<double> r(layer_in_channels(layer), 0.0);
  const Tensor& w = weight_of(layer);
  for_each_in_channel(layer, [&](size_t i, size_t c) { r[c] = std::max(r[c], std::fabs(w[i])); });
  return r;
}

void divide_out_channels(Node& layer, std::span<const double> k) {
  Tensor& w = weight_of(layer);
  Tensor& b = bias_of(layer);
  const size_t co = w.dim(0);
  if (k.size() != co) {
    throw std::invalid_argument("divide_out_channels: factor count mismatch");
  }
  const size_t per = w.size() / co;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] /= k[i / per];
  }
  for (size_t j = 0; j < co; ++j) {
    b[j] /= k[j];
  }
}

void multiply_in_channels(Node& layer, std::span<const double> k) {
  if (k.size() != layer_in_channels(layer)) {
    throw std::invalid_argument("multiply_in_channels: factor count mismatch");
  }
  Tensor& w = weight_of(layer);
  for_each_in_channel(layer, [&](size_t i, size_t c) { w[i] *= k[c]; });
}

std::vector<double> equalization_factors(const LayerGraph& g, const ScalingGroup& group) {
  std::vector<double> r_src(group.channels, 0.0);
  std::vector<double> r_sink(group.channels, 0.0);
  for (size_t s : group.sources) {
    const auto r = out_channel_max(g.node(s));
    const Tensor& b = bias_of(g.node(s));
    for (size_t j = 0; j < group.channels; ++j) {
      r_src[j] = std::max({r_src[j], r[j], std::fabs(b[j]) / kBiasRangeDivisor});
    }
  }
  for (size_t s : group.sinks) {
    const auto r = in_channel_max(g.node(s));
    for (size_t j = 0; j < group.channels; ++j) {
      r_sink[j] = std::max(r_sink[j], r[j]);
    }
  }
  std::vector<double> k(group.channels, 1.0);
  for (size_t j = 0; j < group.channels; ++j) {
    if (r_src[j] > 0.0 && r_sink[j] > 0.0) {
      k[j] = std::sqrt(r_src[j] / r_sink[j]);
    }
  }
  return k;
}

namespace {

// Where each layer's channels sit in the joint unknown vector x = log k:
// out channels of a source, in channels of a sink, or -1 when unscaled.
struct ChannelIndex {
  std::vector<std::vector<long>> out;
  std::vector<std::vector<long>> in;
  size_t count = 0;
};

ChannelIndex index_channels(const LayerGraph& g, const std::vector<ScalingGroup>& groups) {
  ChannelIndex ix;
  ix.out.resize(g.size());
  ix.in.resize(g.size());
  for (const auto& grp : groups) {
    for (size_t s : grp.sources) {
      ix.out[s].resize(grp.channels);
      std::iota(ix.out[s].begin(), ix.out[s].end(), static_cast<long>(ix.count));
    }
    for (size_t s : grp.sinks) {
      ix.in[s].resize(grp.channels);
      std::iota(ix.in[s].begin(), ix.in[s].end(), static_cast<long>(ix.count));
    }
    ix.count += grp.channels;
  }
  return ix;
}

long var_at(const std::vector<long>& v, size_t i) { return v.empty() ? -1 : v[i]; }

// Largest source and sink magnitude of every channel, each with the other
// unknown its value depends on (the input channel of the source weight, the
// output channel of the sink weight).
struct Extremes {
  std::vector<double> r1, r2;
  std::vector<long> r1_other, r2_other;
};

Extremes channel_extremes(const LayerGraph& g, const std::vector<ScalingGroup>& groups, const ChannelIndex& ix) {
  Extremes e;
  e.r1.assign(ix.count, 0.0);
  e.r2.assign(ix.count, 0.0);
  e.r1_other.assign(ix.count, -1);
  e.r2_other.assign(ix.count, -1);
  for (const auto& grp : groups) {
    for (size_t s : grp.sources) {
      const Node& n = g.node(s);
      const Tensor& w = weight_of(n);
      const Tensor& b = bias_of(n);
      const size_t per = w.size() / w.dim(0);
      for (size_t o = 0; o < w.dim(0); ++o) {
        const auto v = static_cast<size_t>(ix.out[s][o]);
        if (std::fabs(b[o]) / kBiasRangeDivisor > e.r1[v]) {
          e.r1[v] = std::fabs(b[o]) / kBiasRangeDivisor;
          e.r1_other[v] = -1;
        }
      }
      for_each_in_channel(n, [&](size_t i, size_t c) {
        const auto v = static_cast<size_t>(ix.out[s][i / per]);
        if (std::fabs(w[i]) > e.r1[v]) {
          e.r1[v] = std::fabs(w[i]);
          e.r1_other[v] = var_at(ix.in[s], c);
        }
      });
    }
    for (size_t s : grp.sinks) {
      const Node& n = g.node(s);
      const Tensor& w = weight_of(n);
      const size_t per = w.size() / w.dim(0);
      for_each_in_channel(n, [&](size_t i, size_t c) {
        const auto v = static_cast<size_t>(ix.in[s][c]);
        if (std::fabs(w[i]) > e.r2[v]) {
          e.r2[v] = std::fabs(w[i]);
          e.r2_other[v] = var_at(ix.out[s], i / per);
        }
      });
    }
  }
  return e;
}

// Sum of squared log range ratios.
double imbalance(const Extremes& e) {
  double acc = 0.0;
  for (size_t v = 0; v < e.r1.size(); ++v) {
    if (e.r1[v] > 0.0 && e.r2[v] > 0.0) {
      const double d = std::log(e.r1[v] / e.r2[v]);
      acc += d * d;
    }
  }
  return acc;
}

void apply_factors(LayerGraph& g, const std::vector<ScalingGroup>& groups, const Eigen::VectorXd& x) {
  Eigen::Index base = 0;
  for (const auto& grp : groups) {
    std::vector<double> k(grp.channels);
    for (size_t j = 0; j < grp.channels; ++j) {
      k[j] = std::exp(x[base + static_cast<Eigen::Index>(j)]);
    }
    for (size_t s : grp.sources) {
      divide_out_channels(g.node(s), k);
    }
    for (size_t s : grp.sinks) {
      multiply_in_channels(g.node(s), k);
    }
    base += static_cast<Eigen::Index>(grp.channels);
  }
}

}  // namespace

CleReport cross_layer_equalize(LayerGraph& g, int iters) {
  // Balancing one group in isolation (the sqrt rule) upsets its neighbours,
  // and a layer inside a residual branch is source and sink of the same
  // group. In log space, with the extreme weights held fixed, balance is
  // linear: 2 x_j - x_in - x_out = log(r1_j / r2_j). Each round solves that
  // system for all channels at once (minimum norm where it is singular) and
  // halves the step until the summed squared log imbalance drops.
  const auto groups = find_scaling_groups(g);
  const ChannelIndex ix = index_channels(g, groups);
  CleReport report;
  report.groups = groups.size();
  const auto n = static_cast<Eigen::Index>(ix.count);
  for (int it = 0; it < iters; ++it) {
    const Extremes e = channel_extremes(g, groups, ix);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto u = static_cast<size_t>(v);
      if (!(e.r1[u] > 0.0 && e.r2[u] > 0.0)) {
        a(v, v) = 1.0;
        continue;
      }
      a(v, v) += 2.0;
      if (e.r1_other[u] >= 0) {
        a(v, e.r1_other[u]) -= 1.0;
      }
      if (e.r2_other[u] >= 0) {
        a(v, e.r2_other[u]) -= 1.0;
      }
      rhs[v] = std::log(e.r1[u] / e.r2[u]);
    }
    if (n == 0 || rhs.isZero(0.0)) {
      report.max_change.push_back(0.0);
      continue;
    }
    Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(rhs);
    const double before = imbalance(e);
    for (int halvings = 0; halvings < 30; ++halvings) {
      LayerGraph trial = g;
      apply_factors(trial, groups, x);
      if (imbalance(channel_extremes(trial, groups, ix)) < before) {
        break;
      }
      x *= 0.5;
    }
    apply_factors(g, groups, x);
    report.max_change.push_back((x.array().exp() - 1.0).abs().maxCoeff());
  }
  return report;
}

std::vector<std::vector<double>> capture_input_channel_max(const LayerGraph& g, const Dataset& data,
                                                           size_t max_samples) {
  const auto layers = g.layer_ids();
  std::vector<std::vector<double>> maxima(layers.size());
  for (size_t l = 0; l < layers.size(); ++l) {
    maxima[l].assign(layer_in_channels(g.node(layers[l])), 0.0);
  }
  const size_t count = std::min(data.size(), max_samples);
  for (size_t n = 0; n < count; ++n) {
    const auto outs = forward_all(g, data.inputs[n]);
    for (size_t l = 0; l < layers.size(); ++l) {
      const Tensor& x = outs[g.node(layers[l]).inputs[0]];
      auto& m = maxima[l];
      const size_t inner = x.size() / m.size();
      for (size_t i = 0; i < x.size(); ++i) {
        m[i / inner] = std::max(m[i / inner], std::fabs(x[i]));
      }
    }
  }
  return maxima;
}

std::vector<double> smoothing_factors(std::span<const double> act_max, std::span<const double> weight_max,
                                      double alpha) {
  if (act_max.size() != weight_max.size()) {
    throw std::invalid_argument("smoothing_factors: size mismatch");
  }
  std::vector<double> sf(act_max.size(), 1.0);
  for (size_t j = 0; j < sf.size(); ++j) {
    if (act_max[j] > 0.0 && weight_max[j] > 0.0) {
      sf[j] = std::pow(act_max[j], alpha) / std::pow(weight_max[j], 1.0 - alpha);
    }
  }
  return sf;
}

SmoothQuantReport smooth_quant(LayerGraph& g, const Dataset& calib_set, double alpha, size_t max_samples) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("smooth_quant: alpha must lie in [0, 1]");
  }
  const auto maxima = capture_input_channel_max(g, calib_set, max_samples);
  std::vector<std::string> names;
  for (size_t id : g.layer_ids()) {
    names.push_back(g.node(id).name);
  }
  SmoothQuantReport report;
  for (size_t l = 0; l < names.size(); ++l) {
    const size_t id = g.find(names[l]);
    const auto sf = smoothing_factors(maxima[l], in_channel_max(g.node(id)), alpha);
    if (std::all_of(sf.begin(), sf.end(), [](double v) { return v == 1.0; })) {
      continue;
    }
    const auto groups = find_scaling_groups(g);
    const ScalingGroup* grp = group_feeding(groups, id);
    if (grp && grp->sinks.size() == 1) {
      for (size_t s : grp->sources) {
        divide_out_channels(g.node(s), sf);
      }
      ++report.folded;
    } else {
      std::vector<double> inv(sf.size());
      std::transform(sf.begin(), sf.end(), inv.begin(), [](double v) { return 1.0 / v; });
      g.insert_before(id, 0, names[l] + ".smooth", ChannelScaleOp{std::move(inv)});
      ++report.inserted;
    }
    multiply_in_channels(g.node(g.find(names[l])), sf);
  }
  return report;
}

std::vector<Eigen::VectorXd> mean_layer_columns(const LayerGraph& g, size_t layer, const Dataset& data,
                                                size_t max_samples, std::span<const BoundSite> sites) {
  const Node& node = g.node(layer);
  const size_t groups = layer_groups(node);
  std::vector<Eigen::VectorXd> mean(groups);
  const size_t count = std::min(data.size(), max_samples);
  if (count == 0) {
    throw std::invalid_argument("mean_layer_columns: no samples");
  }
  for (size_t n = 0; n < count; ++n) {
    const auto outs = forward_all(g, data.inputs[n], sites);
    const Tensor& x = outs[node.inputs[0]];
    for (size_t gi = 0; gi < groups; ++gi) {
      const Eigen::MatrixXd cols = layer_columns(node, x, gi);
      const Eigen::VectorXd m = cols.rowwise().mean();
      if (n == 0) {
        mean[gi] = m;
      } else {
        mean[gi] += m;
      }
    }
  }
  for (auto& m : mean) {
    m /= static_cast<double>(count);
  }
  return mean;
}

void bias_correct(LayerGraph& quantized, const LayerGraph& reference, const QuantRecipe& recipe,
                  const CalibTable& calib, const Dataset& calib_set) {
  const auto layers = quantized.layer_ids();
  if (layers != reference.layer_ids()) {
    throw std::invalid_argument("bias_correct: graphs differ in topology");
  }
  const size_t max_samples = recipe.calibration.max_samples;
  for (size_t id : layers) {
    const auto sites = bind_sites(quantized, recipe, calib);
    const auto mean = mean_layer_columns(quantized, id, calib_set, max_samples, sites);
    Node& q = quantized.node(id);
    const Node& ref = reference.node(id);
    Tensor& b = bias_of(q);
    const size_t rows = layer_out_channels(q) / layer_groups(q);
    for (size_t gi = 0; gi < mean.size(); ++gi) {
      const Eigen::MatrixXd eps = group_weight(q, gi) - group_weight(ref, gi);
      const Eigen::VectorXd shift = eps * mean[gi];
      for (size_t r = 0; r < rows; ++r) {
        b[gi * rows + r] -= shift[static_cast<Eigen::Index>(r)];
      }
    }
  }
}

}  // namespace mfq
