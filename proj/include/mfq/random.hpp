// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random numbers that come out identical on every platform. The
// standard distributions are implementation-defined, so only the engine is
// taken from <random>.

#pragma once

#include <cstdint>
#include <random>

namespace mfq {

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n);
  uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mfq
