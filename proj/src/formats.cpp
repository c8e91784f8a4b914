// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/formats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mfq {

namespace {

constexpr int kMaxBits = 16;

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw std::invalid_argument("malformed format literal '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

IntFormat::IntFormat(int bit_width) : bit_width_(bit_width) {
  if (bit_width < 2 || bit_width > kMaxBits) {
    throw std::invalid_argument("integer bit width must be in [2, 16], got " + std::to_string(bit_width));
  }
}

MinifloatFormat::MinifloatFormat(int exponent_bits, int mantissa_bits)
    : MinifloatFormat(exponent_bits, mantissa_bits, exponent_bits >= 1 ? default_bias(exponent_bits) : 0) {}

MinifloatFormat::MinifloatFormat(int exponent_bits, int mantissa_bits, int bias)
    : exponent_bits_(exponent_bits), mantissa_bits_(mantissa_bits), bias_(bias) {
  if (exponent_bits < 1 || mantissa_bits < 1) {
    throw std::invalid_argument("minifloat needs at least one exponent and one mantissa bit");
  }
  if (bit_width() > kMaxBits) {
    throw std::invalid_argument("minifloat wider than 16 bits is not supported");
  }
  if (bias < -512 || bias > 512) {
    throw std::invalid_argument("exponent bias out of range");
  }
}

double MinifloatFormat::q_max() const noexcept {
  const double significand = 2.0 - std::ldexp(1.0, -mantissa_bits_);
  return std::ldexp(significand, (1 << exponent_bits_) - bias_ - 1);
}

double MinifloatFormat::min_subnormal() const noexcept { return std::ldexp(1.0, min_scale_exponent()); }

double MinifloatFormat::min_normal() const noexcept { return std::ldexp(1.0, 1 - bias_); }

MinifloatFields unpack(const MinifloatFormat& format, uint32_t code) {
  const int m = format.mantissa_bits();
  const int e = format.exponent_bits();
  if (code >> format.bit_width()) {
    throw std::invalid_argument("code has more bits than the format");
  }
  MinifloatFields f;
  f.mantissa = code & ((1u << m) - 1);
  f.exponent = (code >> m) & ((1u << e) - 1);
  f.negative = (code >> (m + e)) & 1u;
  return f;
}

uint32_t pack(const MinifloatFormat& format, const MinifloatFields& fields) {
  const int m = format.mantissa_bits();
  const int e = format.exponent_bits();
  return (static_cast<uint32_t>(fields.negative) << (m + e)) | (fields.exponent << m) | fields.mantissa;
}

double decode(const MinifloatFormat& format, uint32_t code) {
  const MinifloatFields f = unpack(format, code);
  const int m = format.mantissa_bits();
  // Integer significand times 2^(exponent - b - m); subnormals use exponent 1
  // with implicit digit 0.
  const bool normal = f.exponent != 0;
  const uint32_t significand = (static_cast<uint32_t>(normal) << m) | f.mantissa;
  const int exponent = (normal ? static_cast<int>(f.exponent) : 1) - format.bias() - m;
  const double magnitude = std::ldexp(static_cast<double>(significand), exponent);
  return f.negative ? -magnitude : magnitude;
}

uint32_t encode(const MinifloatFormat& format, double value) {
  if (value == 0.0) {
    return 0;
  }
  const int m = format.mantissa_bits();
  const double magnitude = std::fabs(value);
  if (!(magnitude <= format.q_max())) {
    throw std::domain_error("value outside minifloat range");
  }
  MinifloatFields f;
  f.negative = value < 0;
  int exponent = std::ilogb(magnitude) + format.bias();
  if (exponent < 1) {
    exponent = 0;
  }
  const int scale = (exponent == 0 ? 1 : exponent) - format.bias() - m;
  const double significand = std::ldexp(magnitude, -scale);
  if (significand != std::floor(significand)) {
    throw std::domain_error("value is not on the minifloat grid");
  }
  const auto sig = static_cast<uint32_t>(significand);
  f.exponent = static_cast<uint32_t>(exponent);
  f.mantissa = sig & ((1u << m) - 1);
  return pack(format, f);
}

std::vector<double> enumerate_grid(const MinifloatFormat& format) {
  if (format.bit_width() > 16) {
    throw std::length_error("grid enumeration limited to 16-bit formats");
  }
  const uint32_t count = 1u << format.bit_width();
  std::vector<double> grid;
  grid.reserve(count);
  for (uint32_t code = 0; code < count; ++code) {
    grid.push_back(decode(format, code) + 0.0);  // -0 + 0 == +0
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::pair<int64_t, int64_t> int_range(const IntFormat& format) { return {format.q_min(), format.q_max()}; }

int bit_width(const NumericFormat& format) {
  return std::visit([](const auto& f) { return f.bit_width(); }, format);
}

double q_max(const NumericFormat& format) {
  return std::visit([](const auto& f) { return static_cast<double>(f.q_max()); }, format);
}

bool is_int(const NumericFormat& format) noexcept { return std::holds_alternative<IntFormat>(format); }

std::string to_string(const NumericFormat& format) {
  if (const auto* i = std::get_if<IntFormat>(&format)) {
    return "int" + std::to_string(i->bit_width());
  }
  const auto& f = std::get<MinifloatFormat>(format);
  std::string out = "e" + std::to_string(f.exponent_bits()) + "m" + std::to_string(f.mantissa_bits());
  if (!f.has_default_bias()) {
    out += "b" + std::to_string(f.bias());
  }
  return out;
}

NumericFormat parse_format(std::string_view text) {
  if (text.starts_with("int")) {
    return IntFormat(parse_int(text.substr(3), text));
  }
  if (text.starts_with("e")) {
    const auto m_pos = text.find('m');
    if (m_pos == std::string_view::npos) {
      throw std::invalid_argument("malformed format literal '" + std::string(text) + "'");
    }
    const int e = parse_int(text.substr(1, m_pos - 1), text);
    const auto b_pos = text.find('b', m_pos);
    if (b_pos == std::string_view::npos) {
      return MinifloatFormat(e, parse_int(text.substr(m_pos + 1), text));
    }
    const int m = parse_int(text.substr(m_pos + 1, b_pos - m_pos - 1), text);
    return MinifloatFormat(e, m, parse_int(text.substr(b_pos + 1), text));
  }
  throw std::invalid_argument("unknown format literal '" + std::string(text) + "'");
}

}  // namespace mfq
