// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfq {

/// Fixed-width two's-complement accumulator of arbitrary width. Additions
/// wrap modulo 2^width like hardware would; the overflow flag is sticky and
/// set whenever an addend or the running sum leaves the signed range.
class WideRegister {
 public:
  explicit WideRegister(int width);

  /// Adds (negative ? -1 : 1) * magnitude * 2^shift.
  void accumulate(uint64_t magnitude, int shift, bool negative);

  int width() const noexcept { return width_; }
  bool overflowed() const noexcept { return overflow_; }
  bool is_negative() const noexcept;
  /// Signed decimal value of the current bit pattern.
  std::string to_string() const;
  /// Limbs, least significant first; bits above width are zero.
  const std::vector<uint64_t>& limbs() const noexcept { return limbs_; }

 private:
  bool bit(const std::vector<uint64_t>& v, int i) const noexcept;
  void mask(std::vector<uint64_t>& v) const noexcept;

  int width_;
  std::vector<uint64_t> limbs_;
  bool overflow_ = false;
};

}  // namespace mfq
