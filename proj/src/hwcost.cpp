// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/hwcost.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace mfq {

namespace {

void check_lengths(const MacConfig& cfg, size_t la, size_t lb) {
  if (la != lb) {
    throw std::invalid_argument("operand vectors differ in length");
  }
  if (la > cfg.n) {
    throw std::invalid_argument("dot product longer than the configured n");
  }
}

}  // namespace

int ceil_log2(uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("ceil_log2(0)");
  }
  return n == 1 ? 0 : 64 - std::countl_zero(n - 1);
}

int dot_product_bitwidth(int w_bits, int a_bits) {
  if (w_bits < 1 || a_bits < 1) {
    throw std::invalid_argument("bit-widths must be positive");
  }
  return w_bits * a_bits;
}

int int_acc_width(const MacConfig& cfg) {
  const auto& a = std::get<IntFormat>(cfg.a);
  const auto& b = std::get<IntFormat>(cfg.b);
  return a.bit_width() + b.bit_width() + ceil_log2(cfg.n) + 1;
}

int fp_acc_width(const MacConfig& cfg) {
  const auto& a = std::get<MinifloatFormat>(cfg.a);
  const auto& b = std::get<MinifloatFormat>(cfg.b);
  return (1 << a.exponent_bits()) + a.mantissa_bits() + (1 << b.exponent_bits()) + b.mantissa_bits() +
         ceil_log2(cfg.n) - 1;
}

int acc_width(const MacConfig& cfg) {
  if (is_int(cfg.a) && is_int(cfg.b)) {
    return int_acc_width(cfg);
  }
  if (!is_int(cfg.a) && !is_int(cfg.b)) {
    return fp_acc_width(cfg);
  }
  throw std::invalid_argument("mixed integer/minifloat MACs are not modelled");
}

int fp_lsb_exponent(const MinifloatFormat& a, const MinifloatFormat& b) {
  return 2 - a.bias() - b.bias() - a.mantissa_bits() - b.mantissa_bits();
}

MacResult simulate_int_mac(const MacConfig& cfg, std::span<const int64_t> a, std::span<const int64_t> b,
                           std::optional<int> width) {
  check_lengths(cfg, a.size(), b.size());
  const auto& fa = std::get<IntFormat>(cfg.a);
  const auto& fb = std::get<IntFormat>(cfg.b);
  MacResult r{WideRegister(width.value_or(int_acc_width(cfg))), 0};
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] < fa.q_min() || a[i] > fa.q_max() || b[i] < fb.q_min() || b[i] > fb.q_max()) {
      throw std::invalid_argument("integer code out of range");
    }
    const int64_t p = a[i] * b[i];
    r.acc.accumulate(static_cast<uint64_t>(p < 0 ? -p : p), 0, p < 0);
  }
  return r;
}

MacResult simulate_fp_mac(const MacConfig& cfg, std::span<const uint32_t> a, std::span<const uint32_t> b,
                          std::optional<int> width) {
  check_lengths(cfg, a.size(), b.size());
  const auto& fa = std::get<MinifloatFormat>(cfg.a);
  const auto& fb = std::get<MinifloatFormat>(cfg.b);
  MacResult r{WideRegister(width.value_or(fp_acc_width(cfg))), fp_lsb_exponent(fa, fb)};
  for (size_t i = 0; i < a.size(); ++i) {
    const auto x = unpack(fa, a[i]);
    const auto y = unpack(fb, b[i]);
    // Hidden bit is 1 unless the exponent field is zero; subnormals use
    // effective exponent 1.
    const uint64_t sig_x = (x.exponent ? (uint64_t{1} << fa.mantissa_bits()) : 0) + x.mantissa;
    const uint64_t sig_y = (y.exponent ? (uint64_t{1} << fb.mantissa_bits()) : 0) + y.mantissa;
    const int shift = static_cast<int>(std::max<uint32_t>(x.exponent, 1) + std::max<uint32_t>(y.exponent, 1)) - 2;
    r.acc.accumulate(sig_x * sig_y, shift, x.negative != y.negative);
  }
  return r;
}

MacCostReport mac_cost(const NumericFormat& weight, const NumericFormat& activation, uint64_t n,
                       std::optional<ReferenceModel> model) {
  MacCostReport rep;
  rep.dot_bitwidth = dot_product_bitwidth(bit_width(weight), bit_width(activation));
  rep.acc_width = acc_width(MacConfig{weight, activation, n});
  if (model) {
    rep.lut = find_lut(*model, is_int(weight) ? FormatKind::int_kind : FormatKind::fp_kind, bit_width(weight),
                       bit_width(activation));
  }
  return rep;
}

}  // namespace mfq
