// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Values transcribed from the published result tables (ImageNet top-1 and
// post-synthesis LUT counts of a pipelined MAC).

#include "mfq/reference_data.hpp"

#include <stdexcept>

namespace mfq {

namespace {

using R = ReferenceModel;

// clang-format off
constexpr ReferenceRow kRows[] = {
    // w, a, dot,  resnet18 {int lut, int acc, fp lut, fp acc}, mobilenetv2, vit_b_32
    {3, 3,  9, {{{25, 48.22,  27,  0.11}, {25,  0.21,  27,  0.11}, {25,  0.11,  27,  0.12}}}},
    {3, 4, 12, {{{37, 62.36,  42, 46.70}, {37,  5.13,  42,  0.18}, {37, 33.45,  42,  0.26}}}},
    {3, 5, 15, {{{38, 65.95,  54, 64.25}, {38, 25.38,  54, 20.67}, {38, 67.16,  54, 70.58}}}},
    {4, 4, 16, {{{40, 64.71,  43, 55.87}, {40, 17.50,  43,  0.52}, {40, 41.47,  43,  0.37}}}},
    {3, 6, 18, {{{44, 67.08,  75, 65.66}, {44, 48.38,  75, 46.68}, {44, 71.98,  75, 72.41}}}},
    {4, 5, 20, {{{50, 67.67,  78, 67.70}, {50, 50.13,  78, 41.37}, {50, 68.62,  78, 74.28}}}},
    {3, 7, 21, {{{51, 67.49,  60, 65.98}, {51, 56.59,  74, 54.40}, {51, 73.45,  74, 72.81}}}},
    {3, 8, 24, {{{57, 67.69, 107, 66.20}, {57, 59.45,  86, 56.51}, {57, 74.04,  86, 72.92}}}},
    {4, 6, 24, {{{56, 68.79,  64, 69.13}, {56, 62.44,  58, 62.45}, {56, 74.08,  83, 75.40}}}},
    {5, 5, 25, {{{55, 68.02,  83, 68.08}, {55, 56.42,  83, 44.80}, {55, 69.44,  83, 74.71}}}},
    {4, 7, 28, {{{64, 69.05,  78, 69.39}, {64, 66.04, 111, 67.50}, {64, 74.91, 111, 75.56}}}},
    {5, 6, 30, {{{63, 69.20,  82, 69.28}, {63, 66.64,  89, 66.48}, {63, 74.39,  95, 75.60}}}},
    {4, 8, 32, {{{67, 69.24,  69, 69.38}, {67, 68.05, 110, 69.03}, {67, 75.45, 110, 75.69}}}},
    {5, 7, 35, {{{71, 69.47, 103, 69.59}, {71, 68.91,  87, 69.74}, {71, 75.29, 118, 75.81}}}},
    {6, 6, 36, {{{72, 69.18,  89, 69.36}, {72, 67.80, 102, 67.34}, {72, 74.55, 103, 75.66}}}},
    {5, 8, 40, {{{78, 69.66, 126, 69.58}, {78, 70.26, 101, 70.89}, {78, 75.74, 126, 75.86}}}},
    {6, 7, 42, {{{78, 69.54, 122, 69.61}, {78, 69.98, 119, 70.50}, {78, 75.26, 115, 75.87}}}},
    {6, 8, 48, {{{87, 69.63, 110, 69.62}, {87, 71.06,  96, 71.17}, {87, 75.70, 110, 75.89}}}},
    {7, 7, 49, {{{92, 69.65, 131, 69.64}, {92, 70.31, 107, 70.76}, {92, 75.30, 111, 75.90}}}},
    {7, 8, 56, {{{110, 69.65, 147, 69.67}, {110, 71.30, 114, 71.41}, {110, 75.72, 121, 75.92}}}},
    {8, 8, 64, {{{116, 69.71, 136, 69.70}, {116, 71.36, 125, 71.48}, {116, 75.79, 170, 75.91}}}},
};

constexpr BestFormat kBest[] = {
    {R::resnet18, 3, 3, {1, 1}, {1, 1}}, {R::mobilenetv2, 3, 3, {1, 1}, {1, 1}}, {R::vit_b_32, 3, 3, {1, 1}, {1, 1}},
    {R::resnet18, 3, 4, {1, 1}, {2, 1}}, {R::mobilenetv2, 3, 4, {1, 1}, {2, 1}}, {R::vit_b_32, 3, 4, {1, 1}, {2, 1}},
    {R::resnet18, 3, 5, {1, 1}, {3, 1}}, {R::mobilenetv2, 3, 5, {1, 1}, {3, 1}}, {R::vit_b_32, 3, 5, {1, 1}, {3, 1}},
    {R::resnet18, 3, 6, {1, 1}, {3, 2}}, {R::mobilenetv2, 3, 6, {1, 1}, {3, 2}}, {R::vit_b_32, 3, 6, {1, 1}, {3, 2}},
    {R::resnet18, 3, 7, {1, 1}, {2, 4}}, {R::mobilenetv2, 3, 7, {1, 1}, {3, 3}}, {R::vit_b_32, 3, 7, {1, 1}, {3, 3}},
    {R::resnet18, 3, 8, {1, 1}, {4, 3}}, {R::mobilenetv2, 3, 8, {1, 1}, {3, 4}}, {R::vit_b_32, 3, 8, {1, 1}, {3, 4}},
    {R::resnet18, 4, 4, {2, 1}, {2, 1}}, {R::mobilenetv2, 4, 4, {2, 1}, {2, 1}}, {R::vit_b_32, 4, 4, {2, 1}, {2, 1}},
    {R::resnet18, 4, 5, {2, 1}, {3, 1}}, {R::mobilenetv2, 4, 5, {2, 1}, {3, 1}}, {R::vit_b_32, 4, 5, {2, 1}, {3, 1}},
    {R::resnet18, 4, 6, {2, 1}, {2, 3}}, {R::mobilenetv2, 4, 6, {1, 2}, {2, 3}}, {R::vit_b_32, 4, 6, {2, 1}, {3, 2}},
    {R::resnet18, 4, 7, {2, 1}, {2, 4}}, {R::mobilenetv2, 4, 7, {2, 1}, {3, 3}}, {R::vit_b_32, 4, 7, {2, 1}, {3, 3}},
    {R::resnet18, 4, 8, {2, 1}, {1, 6}}, {R::mobilenetv2, 4, 8, {1, 2}, {3, 4}}, {R::vit_b_32, 4, 8, {2, 1}, {3, 4}},
    {R::resnet18, 5, 5, {2, 2}, {3, 1}}, {R::mobilenetv2, 5, 5, {2, 2}, {3, 1}}, {R::vit_b_32, 5, 5, {2, 2}, {3, 1}},
    {R::resnet18, 5, 6, {1, 3}, {2, 3}}, {R::mobilenetv2, 5, 6, {2, 2}, {2, 3}}, {R::vit_b_32, 5, 6, {2, 2}, {3, 2}},
    {R::resnet18, 5, 7, {1, 3}, {2, 4}}, {R::mobilenetv2, 5, 7, {2, 2}, {2, 4}}, {R::vit_b_32, 5, 7, {2, 2}, {3, 3}},
    {R::resnet18, 5, 8, {1, 3}, {3, 4}}, {R::mobilenetv2, 5, 8, {2, 2}, {2, 5}}, {R::vit_b_32, 5, 8, {1, 3}, {3, 4}},
    {R::resnet18, 6, 6, {2, 3}, {2, 3}}, {R::mobilenetv2, 6, 6, {1, 4}, {2, 3}}, {R::vit_b_32, 6, 6, {3, 2}, {3, 2}},
    {R::resnet18, 6, 7, {2, 3}, {3, 3}}, {R::mobilenetv2, 6, 7, {2, 3}, {2, 4}}, {R::vit_b_32, 6, 7, {3, 2}, {3, 3}},
    {R::resnet18, 6, 8, {1, 4}, {3, 4}}, {R::mobilenetv2, 6, 8, {1, 4}, {2, 5}}, {R::vit_b_32, 6, 8, {1, 4}, {3, 4}},
    {R::resnet18, 7, 7, {2, 4}, {3, 3}}, {R::mobilenetv2, 7, 7, {1, 5}, {2, 4}}, {R::vit_b_32, 7, 7, {1, 5}, {3, 3}},
    {R::resnet18, 7, 8, {3, 3}, {3, 4}}, {R::mobilenetv2, 7, 8, {1, 5}, {2, 5}}, {R::vit_b_32, 7, 8, {2, 4}, {2, 5}},
    {R::resnet18, 8, 8, {3, 4}, {3, 4}}, {R::mobilenetv2, 8, 8, {1, 6}, {2, 5}}, {R::vit_b_32, 8, 8, {4, 3}, {2, 5}},
};
// clang-format on

size_t model_index(ReferenceModel m) { return static_cast<size_t>(m); }

}  // namespace

std::string to_string(ReferenceModel m) {
  switch (m) {
    case ReferenceModel::resnet18:
      return "resnet18";
    case ReferenceModel::mobilenetv2:
      return "mobilenetv2";
    case ReferenceModel::vit_b_32:
      return "vit_b_32";
  }
  return "?";
}

ReferenceModel parse_reference_model(std::string_view text) {
  for (auto m : kReferenceModels) {
    if (text == to_string(m)) {
      return m;
    }
  }
  throw std::invalid_argument("unknown reference model '" + std::string(text) + "'");
}

std::string to_string(FormatKind k) { return k == FormatKind::int_kind ? "int" : "fp"; }

FormatKind parse_format_kind(std::string_view text) {
  if (text == "int") {
    return FormatKind::int_kind;
  }
  if (text == "fp") {
    return FormatKind::fp_kind;
  }
  throw std::invalid_argument("format kind must be 'int' or 'fp', got '" + std::string(text) + "'");
}

std::span<const ReferenceRow> reference_rows() { return kRows; }

double reference_baseline_accuracy(ReferenceModel m) {
  switch (m) {
    case ReferenceModel::resnet18:
      return 69.76;
    case ReferenceModel::mobilenetv2:
      return 71.90;
    case ReferenceModel::vit_b_32:
      return 75.91;
  }
  return 0.0;
}

std::optional<int> find_lut(ReferenceModel model, FormatKind kind, int w_bits, int a_bits) {
  for (const auto& row : kRows) {
    if (row.w_bits == w_bits && row.a_bits == a_bits) {
      const auto& r = row.models[model_index(model)];
      return kind == FormatKind::int_kind ? r.int_lut : r.fp_lut;
    }
  }
  return std::nullopt;
}

int lut_lookup(ReferenceModel model, FormatKind kind, int w_bits, int a_bits) {
  if (auto v = find_lut(model, kind, w_bits, a_bits)) {
    return *v;
  }
  throw std::out_of_range("no LUT entry for W" + std::to_string(w_bits) + "/A" + std::to_string(a_bits));
}

std::span<const BestFormat> best_format_table() { return kBest; }

const BestFormat& best_format(ReferenceModel model, int w_bits, int a_bits) {
  for (const auto& b : kBest) {
    if (b.model == model && b.w_bits == w_bits && b.a_bits == a_bits) {
      return b;
    }
  }
  throw std::out_of_range("no best-format entry for " + to_string(model) + " W" + std::to_string(w_bits) + "/A" +
                          std::to_string(a_bits));
}

}  // namespace mfq
