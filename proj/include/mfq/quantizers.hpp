// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fake-quantization kernels. Integer: clip(round(x / s), q_min, q_max) * s.
// Minifloat: two-level scaling, an outer scale s per tensor or channel and an
// inner power-of-two scale ss per element that selects the binade.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mfq/formats.hpp"
#include "mfq/tensor.hpp"

namespace mfq {

enum class Granularity { per_tensor, per_channel };

std::string to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

/// Outer scales s = t / q_max, one per tensor or one per slice along `axis`.
struct ScalingSpec {
  Granularity granularity = Granularity::per_tensor;
  size_t axis = 0;
  std::vector<double> t;
  std::vector<double> s;

  /// Scale that applies to flat element `index` of a tensor with `shape`.
  double scale_for(const Shape& shape, size_t index) const;
};

/// Fake-quantized tensor: `values / s` lies on the format grid.
struct QTensor {
  Tensor values;
  NumericFormat format;
  ScalingSpec scaling;
};

/// Round half to even; relies on the default floating-point rounding mode.
double round_half_even(double x) noexcept;

/// Scale substituted for a zero range so that dead channels quantize to 0.
double zero_range_scale() noexcept;

ScalingSpec compute_scale(const Tensor& x, const NumericFormat& format, Granularity granularity, size_t axis = 0);

/// Per-tensor spec from a known range statistic (calibrated activations).
ScalingSpec scaling_from_range(double t, const NumericFormat& format);

/// Integer code for a normalized value x / s.
double int_grid_value(double normalized, const IntFormat& format) noexcept;

/// Inner scale exponent p = max(floor(log2 |x|) - m, 1 - b - m) for x != 0.
int fp_scale_exponent(double normalized, const MinifloatFormat& format) noexcept;

/// Nearest minifloat grid value for a normalized value, saturating at q_max.
double fp_grid_value(double normalized, const MinifloatFormat& format) noexcept;

double grid_value(double normalized, const NumericFormat& format) noexcept;

/// Scalar fake quantization s * grid_value(x / s).
double fake_quantize(double x, double scale, const NumericFormat& format) noexcept;

QTensor int_quantize(const Tensor& x, const ScalingSpec& spec, const IntFormat& format);
QTensor fp_quantize(const Tensor& x, const ScalingSpec& spec, const MinifloatFormat& format);
QTensor quantize(const Tensor& x, const ScalingSpec& spec, const NumericFormat& format);
Tensor dequantize(const QTensor& q);

/// compute_scale followed by quantize/dequantize.
Tensor quantize_dequantize(const Tensor& x, const NumericFormat& format, Granularity granularity, size_t axis = 0);

}  // namespace mfq
