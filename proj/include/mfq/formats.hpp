// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Integer and minifloat number formats and the math of their grids.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mfq {

/// Signed integer format with zero point 0.
class IntFormat {
 public:
  explicit IntFormat(int bit_width);

  int bit_width() const noexcept { return bit_width_; }
  int64_t q_min() const noexcept { return -(int64_t{1} << (bit_width_ - 1)); }
  int64_t q_max() const noexcept { return (int64_t{1} << (bit_width_ - 1)) - 1; }
  int64_t zero_point() const noexcept { return 0; }

  friend bool operator==(const IntFormat&, const IntFormat&) = default;

 private:
  int bit_width_;
};

/// Sign-magnitude minifloat with subnormals and no inf/NaN codes.
///
/// Code layout, most significant bit first: sign | exponent (e bits) |
/// mantissa (m bits). Every code is a finite real; both zero codes decode
/// to 0.
class MinifloatFormat {
 public:
  /// Uses the IEEE bias 2^(e-1) - 1.
  MinifloatFormat(int exponent_bits, int mantissa_bits);
  MinifloatFormat(int exponent_bits, int mantissa_bits, int bias);

  int exponent_bits() const noexcept { return exponent_bits_; }
  int mantissa_bits() const noexcept { return mantissa_bits_; }
  int bias() const noexcept { return bias_; }
  int bit_width() const noexcept { return 1 + exponent_bits_ + mantissa_bits_; }
  bool has_default_bias() const noexcept { return bias_ == default_bias(exponent_bits_); }

  /// (2 - 2^-m) * 2^(2^e - b - 1)
  double q_max() const noexcept;
  double q_min() const noexcept { return -q_max(); }
  /// log2 of the grid spacing in the subnormal binade, 1 - b - m.
  int min_scale_exponent() const noexcept { return 1 - bias_ - mantissa_bits_; }
  double min_subnormal() const noexcept;
  double min_normal() const noexcept;
  int max_biased_exponent() const noexcept { return (1 << exponent_bits_) - 1; }

  static int default_bias(int exponent_bits) noexcept { return (1 << (exponent_bits - 1)) - 1; }

  friend bool operator==(const MinifloatFormat&, const MinifloatFormat&) = default;

 private:
  int exponent_bits_;
  int mantissa_bits_;
  int bias_;
};

using NumericFormat = std::variant<IntFormat, MinifloatFormat>;

/// Fields of a minifloat code.
struct MinifloatFields {
  bool negative = false;
  uint32_t exponent = 0;
  uint32_t mantissa = 0;
};

MinifloatFields unpack(const MinifloatFormat& format, uint32_t code);
uint32_t pack(const MinifloatFormat& format, const MinifloatFields& fields);

/// Value of a code. Exact in double for every supported format.
double decode(const MinifloatFormat& format, uint32_t code);

/// Inverse of decode for values on the grid; -0 encodes as +0. Throws
/// std::domain_error for off-grid values.
uint32_t encode(const MinifloatFormat& format, double value);

/// All distinct representable values in ascending order. Throws
/// std::length_error for formats wider than 16 bits.
std::vector<double> enumerate_grid(const MinifloatFormat& format);

std::pair<int64_t, int64_t> int_range(const IntFormat& format);

int bit_width(const NumericFormat& format);
double q_max(const NumericFormat& format);
bool is_int(const NumericFormat& format) noexcept;

/// "int4", "e2m1", "e2m1b2".
std::string to_string(const NumericFormat& format);
NumericFormat parse_format(std::string_view text);

}  // namespace mfq
