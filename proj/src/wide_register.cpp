// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/wide_register.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace mfq {

WideRegister::WideRegister(int width) : width_(width) {
  if (width < 2) {
    throw std::invalid_argument("register width must be at least 2 bits");
  }
  limbs_.assign(static_cast<size_t>((width + 63) / 64), 0);
}

bool WideRegister::bit(const std::vector<uint64_t>& v, int i) const noexcept {
  return (v[static_cast<size_t>(i / 64)] >> (i % 64)) & 1u;
}

void WideRegister::mask(std::vector<uint64_t>& v) const noexcept {
  const int top = width_ % 64;
  if (top) {
    v.back() &= (uint64_t{1} << top) - 1;
  }
}

bool WideRegister::is_negative() const noexcept { return bit(limbs_, width_ - 1); }

void WideRegister::accumulate(uint64_t magnitude, int shift, bool negative) {
  if (magnitude == 0) {
    return;
  }
  if (shift < 0) {
    throw std::invalid_argument("negative shift");
  }
  // Addend must fit the signed range: |x| <= 2^(w-1) - 1, or 2^(w-1) when negative.
  const int msb = 63 - std::countl_zero(magnitude) + shift;
  const bool is_pow2 = std::has_single_bit(magnitude);
  if (msb > width_ - 1 || (msb == width_ - 1 && !(negative && is_pow2))) {
    overflow_ = true;
  }
  std::vector<uint64_t> add(limbs_.size(), 0);
  const size_t word = static_cast<size_t>(shift / 64);
  const int off = shift % 64;
  if (word < add.size()) {
    add[word] |= magnitude << off;
    if (off && word + 1 < add.size()) {
      add[word + 1] |= magnitude >> (64 - off);
    }
  }
  if (negative) {
    // Two's complement: invert and add one.
    uint64_t carry = 1;
    for (auto& l : add) {
      l = ~l;
      const uint64_t s = l + carry;
      carry = (carry && s == 0) ? 1 : 0;
      l = s;
    }
  }
  mask(add);
  const bool sa = is_negative();
  const bool sb = bit(add, width_ - 1);
  uint64_t carry = 0;
  for (size_t i = 0; i < limbs_.size(); ++i) {
    const uint64_t a = limbs_[i];
    const uint64_t s1 = a + add[i];
    const uint64_t c1 = s1 < a ? 1 : 0;
    const uint64_t s2 = s1 + carry;
    const uint64_t c2 = s2 < s1 ? 1 : 0;
    limbs_[i] = s2;
    carry = c1 | c2;
  }
  mask(limbs_);
  if (sa == sb && is_negative() != sa) {
    overflow_ = true;
  }
}

std::string WideRegister::to_string() const {
  std::vector<uint64_t> mag = limbs_;
  const bool neg = is_negative();
  if (neg) {
    uint64_t carry = 1;
    for (auto& l : mag) {
      l = ~l;
      const uint64_t s = l + carry;
      carry = (carry && s == 0) ? 1 : 0;
      l = s;
    }
    mask(mag);
  }
  std::string digits;
  auto is_zero = [&] { return std::all_of(mag.begin(), mag.end(), [](uint64_t l) { return l == 0; }); };
  while (!is_zero()) {
    // Long division by 10 in 32-bit halves so every step fits in 64 bits.
    uint64_t rem = 0;
    for (size_t i = mag.size(); i-- > 0;) {
      const uint64_t hi = (rem << 32) | (mag[i] >> 32);
      const uint64_t q_hi = hi / 10;
      rem = hi % 10;
      const uint64_t lo = (rem << 32) | (mag[i] & 0xffffffffu);
      const uint64_t q_lo = lo / 10;
      rem = lo % 10;
      mag[i] = (q_hi << 32) | q_lo;
    }
    digits.push_back(static_cast<char>('0' + static_cast<int>(rem)));
  }
  if (digits.empty()) {
    return "0";
  }
  if (neg) {
    digits.push_back('-');
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

}  // namespace mfq
