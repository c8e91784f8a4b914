// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfq {

namespace {

void check_spec(const Tensor& x, const ScalingSpec& spec) {
  if (spec.s.empty()) {
    throw std::invalid_argument("scaling spec has no scales");
  }
  if (spec.granularity == Granularity::per_tensor) {
    if (spec.s.size() != 1) {
      throw std::invalid_argument("per-tensor spec must hold exactly one scale");
    }
    return;
  }
  if (spec.axis >= x.rank() || x.dim(spec.axis) != spec.s.size()) {
    throw std::invalid_argument("per-channel spec does not match tensor shape");
  }
}

template <typename GridFn>
Tensor apply_grid(const Tensor& x, const ScalingSpec& spec, GridFn&& grid) {
  check_spec(x, spec);
  Tensor out(x.shape());
  if (spec.granularity == Granularity::per_tensor) {
    const double s = spec.s[0];
    for (size_t i = 0; i < x.size(); ++i) {
      out[i] = s * grid(x[i] / s);
    }
    return out;
  }
  const AxisLayout layout = axis_layout(x.shape(), spec.axis);
  size_t i = 0;
  for (size_t o = 0; o < layout.outer; ++o) {
    for (size_t c = 0; c < layout.extent; ++c) {
      const double s = spec.s[c];
      for (size_t k = 0; k < layout.inner; ++k, ++i) {
        out[i] = s * grid(x[i] / s);
      }
    }
  }
  return out;
}

}  // namespace

std::string to_string(Granularity g) { return g == Granularity::per_tensor ? "per_tensor" : "per_channel"; }

Granularity parse_granularity(std::string_view text) {
  if (text == "per_tensor" || text == "pt") {
    return Granularity::per_tensor;
  }
  if (text == "per_channel" || text == "pc") {
    return Granularity::per_channel;
  }
  throw std::invalid_argument("unknown granularity '" + std::string(text) + "'");
}

double ScalingSpec::scale_for(const Shape& shape, size_t index) const {
  if (granularity == Granularity::per_tensor) {
    return s.at(0);
  }
  const AxisLayout layout = axis_layout(shape, axis);
  return s.at((index / layout.inner) % layout.extent);
}

double round_half_even(double x) noexcept { return std::nearbyint(x); }

double zero_range_scale() noexcept { return std::numeric_limits<double>::min(); }

ScalingSpec compute_scale(const Tensor& x, const NumericFormat& format, Granularity granularity, size_t axis) {
  if (x.empty()) {
    throw std::invalid_argument("cannot compute a scale for an empty tensor");
  }
  ScalingSpec spec;
  spec.granularity = granularity;
  spec.axis = axis;
  if (granularity == Granularity::per_tensor) {
    spec.t = {x.max_abs()};
  } else {
    if (axis >= x.rank()) {
      throw std::invalid_argument("per-channel axis out of range");
    }
    const AxisLayout layout = axis_layout(x.shape(), axis);
    spec.t.assign(layout.extent, 0.0);
    size_t i = 0;
    for (size_t o = 0; o < layout.outer; ++o) {
      for (size_t c = 0; c < layout.extent; ++c) {
        for (size_t k = 0; k < layout.inner; ++k, ++i) {
          spec.t[c] = std::max(spec.t[c], std::fabs(x[i]));
        }
      }
    }
  }
  const double qmax = q_max(format);
  spec.s.reserve(spec.t.size());
  for (double t : spec.t) {
    spec.s.push_back(t > 0.0 ? t / qmax : zero_range_scale());
  }
  return spec;
}

ScalingSpec scaling_from_range(double t, const NumericFormat& format) {
  ScalingSpec spec;
  spec.t = {t};
  spec.s = {t > 0.0 ? t / q_max(format) : zero_range_scale()};
  return spec;
}

double int_grid_value(double normalized, const IntFormat& format) noexcept {
  const double code = round_half_even(normalized);
  return std::clamp(code, static_cast<double>(format.q_min()), static_cast<double>(format.q_max())) + 0.0;
}

int fp_scale_exponent(double normalized, const MinifloatFormat& format) noexcept {
  // ilogb reads the binary exponent directly, so powers of two never land in
  // the wrong binade.
  const int binade = std::ilogb(normalized);
  return std::max(binade - format.mantissa_bits(), format.min_scale_exponent());
}

double fp_grid_value(double normalized, const MinifloatFormat& format) noexcept {
  if (normalized == 0.0) {
    return 0.0;
  }
  const double qmax = format.q_max();
  if (std::isinf(normalized)) {
    return normalized > 0 ? qmax : -qmax;
  }
  const int p = fp_scale_exponent(normalized, format);
  const double rounded = std::ldexp(round_half_even(std::ldexp(normalized, -p)), p);
  return std::clamp(rounded, -qmax, qmax) + 0.0;
}

double grid_value(double normalized, const NumericFormat& format) noexcept {
  if (const auto* i = std::get_if<IntFormat>(&format)) {
    return int_grid_value(normalized, *i);
  }
  return fp_grid_value(normalized, std::get<MinifloatFormat>(format));
}

double fake_quantize(double x, double scale, const NumericFormat& format) noexcept {
  return scale * grid_value(x / scale, format);
}

QTensor int_quantize(const Tensor& x, const ScalingSpec& spec, const IntFormat& format) {
  return {apply_grid(x, spec, [&](double v) { return int_grid_value(v, format); }), format, spec};
}

QTensor fp_quantize(const Tensor& x, const ScalingSpec& spec, const MinifloatFormat& format) {
  return {apply_grid(x, spec, [&](double v) { return fp_grid_value(v, format); }), format, spec};
}

QTensor quantize(const Tensor& x, const ScalingSpec& spec, const NumericFormat& format) {
  if (const auto* i = std::get_if<IntFormat>(&format)) {
    return int_quantize(x, spec, *i);
  }
  return fp_quantize(x, spec, std::get<MinifloatFormat>(format));
}

Tensor dequantize(const QTensor& q) { return q.values; }

Tensor quantize_dequantize(const Tensor& x, const NumericFormat& format, Granularity granularity, size_t axis) {
  return dequantize(quantize(x, compute_scale(x, format, granularity, axis), format));
}

}  // namespace mfq
