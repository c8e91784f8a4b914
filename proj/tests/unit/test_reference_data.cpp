// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "mfq/reference_data.hpp"
#include "published_tables.hpp"

using namespace mfq;

namespace {

const testing::PublishedTables& published() {
  static const auto t = testing::read_published_tables(MFQ_FIXTURE_DIR "/published_tables.tex");
  return t;
}

}  // namespace

TEST_CASE("LaTeX table reader sees every row") {
  const auto& t = published();
  CHECK(t.rows.size() == 21);
  CHECK(t.splits.size() == 21);
  CHECK(t.baseline == std::array<double, 3>{69.76, 71.90, 75.91});
}

TEST_CASE("embedded results equal the published rows") {
  const auto& t = published();
  const auto rows = reference_rows();
  REQUIRE(rows.size() == t.rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& got = rows[i];
    const auto& want = t.rows[i];
    CAPTURE(want.w);
    CAPTURE(want.a);
    CHECK(got.w_bits == want.w);
    CHECK(got.a_bits == want.a);
    CHECK(got.dot_bitwidth == want.dot);
    CHECK(got.dot_bitwidth == got.w_bits * got.a_bits);
    for (size_t m = 0; m < 3; ++m) {
      CHECK(got.models[m].int_accuracy == want.cells[m][0]);
      CHECK(got.models[m].fp_accuracy == want.cells[m][1]);
      CHECK(got.models[m].int_lut == want.cells[m][2]);
      CHECK(got.models[m].fp_lut == want.cells[m][3]);
      CHECK(lut_lookup(kReferenceModels[m], FormatKind::int_kind, want.w, want.a) == want.cells[m][2]);
      CHECK(lut_lookup(kReferenceModels[m], FormatKind::fp_kind, want.w, want.a) == want.cells[m][3]);
    }
  }
  for (size_t m = 0; m < 3; ++m) {
    CHECK(reference_baseline_accuracy(kReferenceModels[m]) == t.baseline[m]);
  }
}

TEST_CASE("rows come in ascending dot-product bit-width") {
  const auto rows = reference_rows();
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i - 1].dot_bitwidth <= rows[i].dot_bitwidth);
  }
  // Exactly the (W, A) pairs with 3 <= W <= A <= 8.
  int count = 0;
  for (int w = 3; w <= 8; ++w) {
    for (int a = w; a <= 8; ++a) {
      CHECK(find_lut(ReferenceModel::resnet18, FormatKind::int_kind, w, a).has_value());
      ++count;
    }
  }
  CHECK(count == 21);
}

TEST_CASE("LUT spot values") {
  for (auto m : kReferenceModels) {
    CHECK(lut_lookup(m, FormatKind::int_kind, 3, 3) == 25);
  }
  CHECK(lut_lookup(ReferenceModel::resnet18, FormatKind::fp_kind, 3, 3) == 27);
  CHECK(lut_lookup(ReferenceModel::vit_b_32, FormatKind::fp_kind, 8, 8) == 170);
  CHECK_THROWS_AS(lut_lookup(ReferenceModel::resnet18, FormatKind::int_kind, 4, 3), std::out_of_range);
  CHECK_THROWS_AS(lut_lookup(ReferenceModel::resnet18, FormatKind::int_kind, 2, 2), std::out_of_range);
  CHECK_FALSE(find_lut(ReferenceModel::mobilenetv2, FormatKind::fp_kind, 9, 9).has_value());
}

TEST_CASE("embedded best splits equal the published table") {
  const auto& t = published();
  REQUIRE(best_format_table().size() == 3 * t.splits.size());
  for (const auto& s : t.splits) {
    for (size_t m = 0; m < 3; ++m) {
      CAPTURE(s.w);
      CAPTURE(s.a);
      CAPTURE(m);
      const auto& b = best_format(kReferenceModels[m], s.w, s.a);
      CHECK(b.weight == ExpMan{s.splits[m][0], s.splits[m][1]});
      CHECK(b.activation == ExpMan{s.splits[m][2], s.splits[m][3]});
      // Every split fills its bit budget: 1 + e + m.
      CHECK(1 + b.weight.e + b.weight.m == s.w);
      CHECK(1 + b.activation.e + b.activation.m == s.a);
    }
  }
}

TEST_CASE("best split spot values") {
  const auto& r = best_format(ReferenceModel::resnet18, 4, 8);
  CHECK(r.weight == ExpMan{2, 1});
  CHECK(r.activation == ExpMan{1, 6});
  const auto& mb = best_format(ReferenceModel::mobilenetv2, 8, 8);
  CHECK(mb.weight == ExpMan{1, 6});
  CHECK(mb.activation == ExpMan{2, 5});
  const auto& v = best_format(ReferenceModel::vit_b_32, 3, 5);
  CHECK(v.weight == ExpMan{1, 1});
  CHECK(v.activation == ExpMan{3, 1});
  CHECK_THROWS_AS(best_format(ReferenceModel::vit_b_32, 5, 3), std::out_of_range);
}

TEST_CASE("model and kind names round-trip") {
  for (auto m : kReferenceModels) {
    CHECK(parse_reference_model(to_string(m)) == m);
  }
  CHECK(parse_format_kind("int") == FormatKind::int_kind);
  CHECK(parse_format_kind("fp") == FormatKind::fp_kind);
  CHECK_THROWS_AS(parse_reference_model("resnet50"), std::invalid_argument);
  CHECK_THROWS_AS(parse_format_kind("float"), std::invalid_argument);
}
