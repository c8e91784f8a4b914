// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// MAC cost model: dot-product bit-width, accumulator widths, and bit-exact
// simulators of an integer MAC and a minifloat MAC with a long fixed-point
// accumulator.

#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "mfq/formats.hpp"
#include "mfq/reference_data.hpp"
#include "mfq/wide_register.hpp"

namespace mfq {

inline constexpr uint64_t kDefaultDotLength = 4608;

struct MacConfig {
  NumericFormat a;
  NumericFormat b;
  uint64_t n = kDefaultDotLength;
};

struct MacCostReport {
  int dot_bitwidth = 0;
  int acc_width = 0;
  std::optional<int> lut;
};

int ceil_log2(uint64_t n);

int dot_product_bitwidth(int w_bits, int a_bits);

/// r_a + r_b + ceil(log2 n) + 1. Both formats must be integers.
int int_acc_width(const MacConfig& cfg);
/// 2^e_a + m_a + 2^e_b + m_b + ceil(log2 n) - 1. Both formats must be minifloats.
int fp_acc_width(const MacConfig& cfg);
/// Dispatches on the format kinds; mixed kinds throw std::invalid_argument.
int acc_width(const MacConfig& cfg);

/// Exponent of the accumulator LSB of the minifloat MAC:
/// 2 - b_a - b_b - m_a - m_b.
int fp_lsb_exponent(const MinifloatFormat& a, const MinifloatFormat& b);

struct MacResult {
  WideRegister acc;
  /// Real value = acc * 2^lsb_exponent (0 for the integer MAC).
  int lsb_exponent = 0;
};

/// Sum of a_i * b_i for integer codes in a register of int_acc_width bits
/// (or `width` when given). Throws std::invalid_argument for more than n
/// products or out-of-range codes.
MacResult simulate_int_mac(const MacConfig& cfg, std::span<const int64_t> a, std::span<const int64_t> b,
                           std::optional<int> width = std::nullopt);

/// Minifloat codes: significands are multiplied as integers, shifted by the
/// sum of the effective exponents minus its minimum (2), negated when the
/// signs differ and accumulated in fp_acc_width bits (or `width`).
MacResult simulate_fp_mac(const MacConfig& cfg, std::span<const uint32_t> a, std::span<const uint32_t> b,
                          std::optional<int> width = std::nullopt);

/// Cost of a weight/activation format pair; the LUT entry comes from the
/// reference table when `model` is given and the pair is tabulated.
MacCostReport mac_cost(const NumericFormat& weight, const NumericFormat& activation, uint64_t n = kDefaultDotLength,
                       std::optional<ReferenceModel> model = std::nullopt);

}  // namespace mfq
