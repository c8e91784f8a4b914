// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "mfq/hwcost.hpp"
#include "mfq/random.hpp"
#include "mfq/wide_register.hpp"

using namespace mfq;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

cpp_int register_value(const WideRegister& r) { return cpp_int(r.to_string()); }

cpp_rational pow2(int e) {
  const cpp_int p = cpp_int(1) << std::abs(e);
  return e >= 0 ? cpp_rational(p) : cpp_rational(cpp_int(1), p);
}

// Exact rational value of a double (minifloat decodes are dyadic).
cpp_rational exact(double v) {
  int e = 0;
  const double frac = std::frexp(v, &e);
  const auto mant = static_cast<int64_t>(std::ldexp(frac, 53));
  return cpp_rational(mant) * pow2(e - 53);
}

cpp_rational fp_oracle(const MinifloatFormat& fa, const MinifloatFormat& fb, const std::vector<uint32_t>& a,
                       const std::vector<uint32_t>& b) {
  cpp_rational sum(0);
  for (size_t i = 0; i < a.size(); ++i) {
    sum += exact(decode(fa, a[i])) * exact(decode(fb, b[i]));
  }
  return sum;
}

uint32_t max_magnitude_code(const MinifloatFormat& f, bool negative) {
  return pack(f, {negative, static_cast<uint32_t>(f.max_biased_exponent()),
                  (uint32_t{1} << f.mantissa_bits()) - 1});
}

}  // namespace

TEST_CASE("dot-product bit-width") {
  CHECK(dot_product_bitwidth(3, 3) == 9);
  CHECK(dot_product_bitwidth(4, 5) == 20);
  CHECK(dot_product_bitwidth(8, 8) == 64);
  CHECK_THROWS_AS(dot_product_bitwidth(0, 4), std::invalid_argument);
}

TEST_CASE("accumulator widths") {
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(4608) == 13);
  CHECK(ceil_log2(8192) == 13);
  CHECK(ceil_log2(8193) == 14);

  CHECK(int_acc_width({IntFormat(8), IntFormat(8), 4608}) == 30);
  CHECK(int_acc_width({IntFormat(3), IntFormat(3), 8}) == 10);
  for (int r = 2; r <= 8; ++r) {
    CHECK(int_acc_width({IntFormat(r), IntFormat(r), 1}) == 2 * r + 1);
  }
  CHECK(fp_acc_width({MinifloatFormat(4, 3), MinifloatFormat(4, 3), 4608}) == 50);
  CHECK(fp_acc_width({MinifloatFormat(1, 1), MinifloatFormat(1, 1), 1}) == 5);
  // The minifloat accumulator is the larger one at 8 bits.
  CHECK(fp_acc_width({MinifloatFormat(4, 3), MinifloatFormat(4, 3), 4608}) >
        int_acc_width({IntFormat(8), IntFormat(8), 4608}));
  CHECK_THROWS_AS(acc_width({IntFormat(4), MinifloatFormat(2, 1), 8}), std::invalid_argument);
}

TEST_CASE("minifloat accumulator width grows in every parameter") {
  for (int ea = 1; ea <= 4; ++ea) {
    for (int ma = 1; ma <= 3; ++ma) {
      const MacConfig base{MinifloatFormat(ea, ma), MinifloatFormat(2, 2), 64};
      const int w = fp_acc_width(base);
      CHECK(fp_acc_width({MinifloatFormat(ea + 1, ma), base.b, base.n}) > w);
      CHECK(fp_acc_width({MinifloatFormat(ea, ma + 1), base.b, base.n}) > w);
      CHECK(fp_acc_width({base.a, MinifloatFormat(3, 2), base.n}) > w);
      CHECK(fp_acc_width({base.a, MinifloatFormat(2, 3), base.n}) > w);
      CHECK(fp_acc_width({base.a, base.b, 65}) > w);
    }
  }
}

TEST_CASE("wide register wraps like two's complement") {
  WideRegister r(8);
  r.accumulate(127, 0, false);
  CHECK(r.to_string() == "127");
  CHECK_FALSE(r.overflowed());
  r.accumulate(1, 0, false);
  CHECK(r.to_string() == "-128");
  CHECK(r.overflowed());

  WideRegister s(8);
  s.accumulate(128, 0, true);  // exactly q_min
  CHECK(s.to_string() == "-128");
  CHECK_FALSE(s.overflowed());
  s.accumulate(3, 2, false);
  CHECK(s.to_string() == "-116");

  WideRegister wide(200);
  wide.accumulate(1, 150, false);
  wide.accumulate(1, 0, true);
  CHECK(cpp_int(wide.to_string()) == (cpp_int(1) << 150) - 1);
  CHECK_FALSE(wide.overflowed());
  CHECK_THROWS_AS(WideRegister(1), std::invalid_argument);
}

TEST_CASE("wide register against an arbitrary-precision sum") {
  Rng rng(11);
  for (int width : {2, 7, 63, 64, 65, 127, 128, 130}) {
    CAPTURE(width);
    WideRegister r(width);
    cpp_int sum = 0;
    const cpp_int lo = -(cpp_int(1) << (width - 1));
    const cpp_int hi = (cpp_int(1) << (width - 1)) - 1;
    bool left_range = false;
    for (int i = 0; i < 300; ++i) {
      const uint64_t mag = rng.bits() >> rng.below(64);
      const int shift = static_cast<int>(rng.below(static_cast<uint64_t>(width)));
      const bool neg = rng.uniform() < 0.5;
      const cpp_int add = (neg ? -1 : 1) * (cpp_int(mag) << shift);
      sum += add;
      left_range = left_range || add < lo || add > hi || sum < lo || sum > hi;
      // Reduce into the signed range like the register does.
      const cpp_int modulus = cpp_int(1) << width;
      cpp_int wrapped = ((sum % modulus) + modulus) % modulus;
      if (wrapped > hi) {
        wrapped -= modulus;
      }
      r.accumulate(mag, shift, neg);
      REQUIRE(register_value(r) == wrapped);
      sum = wrapped;
    }
    CHECK(r.overflowed() == left_range);
  }
}

TEST_CASE("integer MAC equals an arbitrary-precision dot product") {
  Rng rng(12);
  for (const auto& [ra, rb] : {std::pair{3, 3}, std::pair{4, 8}, std::pair{8, 8}, std::pair{2, 6}}) {
    const IntFormat fa(ra);
    const IntFormat fb(rb);
    const MacConfig cfg{fa, fb, 4608};
    for (int trial = 0; trial < 200; ++trial) {
      const size_t len = trial == 0 ? 4608 : 1 + rng.below(300);
      std::vector<int64_t> a(len);
      std::vector<int64_t> b(len);
      cpp_int oracle = 0;
      for (size_t i = 0; i < len; ++i) {
        a[i] = fa.q_min() + static_cast<int64_t>(rng.below(static_cast<uint64_t>(fa.q_max() - fa.q_min() + 1)));
        b[i] = fb.q_min() + static_cast<int64_t>(rng.below(static_cast<uint64_t>(fb.q_max() - fb.q_min() + 1)));
        oracle += cpp_int(a[i]) * b[i];
      }
      const auto r = simulate_int_mac(cfg, a, b);
      REQUIRE(register_value(r.acc) == oracle);
      REQUIRE_FALSE(r.acc.overflowed());
      CHECK(r.acc.width() == 30 - 16 + ra + rb);
    }
  }
  const std::vector<int64_t> zeros(8, 0);
  CHECK(simulate_int_mac({IntFormat(4), IntFormat(4), 8}, zeros, zeros).acc.to_string() == "0");
}

TEST_CASE("integer MAC rejects bad input") {
  const MacConfig cfg{IntFormat(4), IntFormat(4), 2};
  const std::vector<int64_t> three{1, 2, 3};
  const std::vector<int64_t> two{1, 2};
  const std::vector<int64_t> big{8, 0};
  CHECK_THROWS_AS(simulate_int_mac(cfg, three, three), std::invalid_argument);
  CHECK_THROWS_AS(simulate_int_mac(cfg, two, three), std::invalid_argument);
  CHECK_THROWS_AS(simulate_int_mac(cfg, big, two), std::invalid_argument);
}

TEST_CASE("integer MAC worst cases fit; the minimal width is exact") {
  for (int ra = 2; ra <= 8; ++ra) {
    for (int rb : {2, 5, 8}) {
      for (uint64_t n : {uint64_t{1}, uint64_t{8}, uint64_t{100}, uint64_t{4096}, uint64_t{4608}}) {
        const IntFormat fa(ra);
        const IntFormat fb(rb);
        const MacConfig cfg{fa, fb, n};
        const std::vector<int64_t> amin(n, fa.q_min());
        const std::vector<int64_t> bmin(n, fb.q_min());
        const std::vector<int64_t> bmax(n, fb.q_max());
        const auto pos = simulate_int_mac(cfg, amin, bmin);
        const auto neg = simulate_int_mac(cfg, amin, bmax);
        CHECK_FALSE(pos.acc.overflowed());
        CHECK_FALSE(neg.acc.overflowed());
        CHECK(register_value(pos.acc) == cpp_int(n) * fa.q_min() * fb.q_min());
        // Smallest register holding the positive worst case n * 2^(ra+rb-2):
        // one sign bit over its magnitude.
        const cpp_int worst = cpp_int(n) << (ra + rb - 2);
        int need = 1;
        while ((cpp_int(1) << (need - 1)) - 1 < worst) {
          ++need;
        }
        CHECK_FALSE(simulate_int_mac(cfg, amin, bmin, need).acc.overflowed());
        CHECK(simulate_int_mac(cfg, amin, bmin, need - 1).acc.overflowed());
        CHECK(need <= int_acc_width(cfg));
      }
    }
  }
}

TEST_CASE("minifloat MAC by hand") {
  const MinifloatFormat e2m1(2, 1);  // bias 1
  const MacConfig cfg{e2m1, e2m1, 4};
  CHECK(fp_lsb_exponent(e2m1, e2m1) == -2);
  const std::vector<uint32_t> one{encode(e2m1, 1.0)};
  const auto r = simulate_fp_mac(cfg, one, one);
  CHECK(r.acc.to_string() == "4");
  CHECK(r.lsb_exponent == -2);

  const std::vector<uint32_t> half{encode(e2m1, 0.5)};  // subnormal
  const auto s = simulate_fp_mac(cfg, half, one);
  CHECK(cpp_rational(register_value(s.acc)) * pow2(s.lsb_exponent) == cpp_rational(1, 2));

  const std::vector<uint32_t> mixed{encode(e2m1, -6.0), encode(e2m1, 0.5)};
  const std::vector<uint32_t> other{encode(e2m1, 3.0), encode(e2m1, -0.5)};
  const auto m = simulate_fp_mac(cfg, mixed, other);
  CHECK(cpp_rational(register_value(m.acc)) * pow2(m.lsb_exponent) == cpp_rational(-73, 4));
}

TEST_CASE("minifloat MAC equals a rational dot product") {
  Rng rng(13);
  const std::vector<std::pair<MinifloatFormat, MinifloatFormat>> pairs{
      {MinifloatFormat(1, 1), MinifloatFormat(1, 1)}, {MinifloatFormat(2, 1), MinifloatFormat(3, 4)},
      {MinifloatFormat(4, 3), MinifloatFormat(4, 3)}, {MinifloatFormat(5, 2), MinifloatFormat(4, 3)},
      {MinifloatFormat(3, 2, 5), MinifloatFormat(2, 2, 0)}};
  for (const auto& [fa, fb] : pairs) {
    CAPTURE(to_string(NumericFormat(fa)));
    CAPTURE(to_string(NumericFormat(fb)));
    const MacConfig cfg{fa, fb, 4608};
    for (int trial = 0; trial < 100; ++trial) {
      const size_t len = trial == 0 ? 4608 : 1 + rng.below(200);
      std::vector<uint32_t> a(len);
      std::vector<uint32_t> b(len);
      for (size_t i = 0; i < len; ++i) {
        a[i] = static_cast<uint32_t>(rng.below(uint64_t{1} << fa.bit_width()));
        b[i] = static_cast<uint32_t>(rng.below(uint64_t{1} << fb.bit_width()));
      }
      const auto r = simulate_fp_mac(cfg, a, b);
      REQUIRE_FALSE(r.acc.overflowed());
      REQUIRE(cpp_rational(register_value(r.acc)) * pow2(r.lsb_exponent) == fp_oracle(fa, fb, a, b));
    }
  }
}

TEST_CASE("minifloat MAC worst cases fit at the formula width") {
  for (int ea = 1; ea <= 5; ++ea) {
    for (int ma = 1; ma <= 4; ++ma) {
      const MinifloatFormat fa(ea, ma);
      const MinifloatFormat fb(ea == 1 ? 2 : ea - 1, ma);
      for (uint64_t n : {uint64_t{1}, uint64_t{64}, uint64_t{4608}}) {
        const MacConfig cfg{fa, fb, n};
        for (bool flip : {false, true}) {
          const std::vector<uint32_t> a(n, max_magnitude_code(fa, flip));
          const std::vector<uint32_t> b(n, max_magnitude_code(fb, false));
          const auto r = simulate_fp_mac(cfg, a, b);
          CHECK_FALSE(r.acc.overflowed());
          CHECK(cpp_rational(register_value(r.acc)) * pow2(r.lsb_exponent) ==
                cpp_rational(n) * exact(decode(fa, a[0])) * exact(decode(fb, b[0])));
        }
      }
    }
  }
}

TEST_CASE("mac_cost bundles the metrics") {
  const auto c = mac_cost(IntFormat(3), IntFormat(3), 4608, ReferenceModel::resnet18);
  CHECK(c.dot_bitwidth == 9);
  CHECK(c.acc_width == 20);
  REQUIRE(c.lut.has_value());
  CHECK(*c.lut == 25);
  const auto f = mac_cost(MinifloatFormat(4, 3), MinifloatFormat(4, 3));
  CHECK(f.dot_bitwidth == 64);
  CHECK(f.acc_width == 50);
  CHECK_FALSE(f.lut.has_value());
  CHECK_FALSE(mac_cost(IntFormat(2), IntFormat(2), 8, ReferenceModel::vit_b_32).lut.has_value());
}
