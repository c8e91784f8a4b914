// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Published ImageNet results for ResNet-18, MobileNetV2 and ViT-B/32:
// per (weight bits, activation bits) the FPGA MAC LUT counts and top-1
// accuracies of the integer and minifloat variants, and the (e, m) split
// that gave the best minifloat accuracy. Shipped verbatim as reference
// data; nothing here is recomputed.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace mfq {

enum class ReferenceModel { resnet18, mobilenetv2, vit_b_32 };
enum class FormatKind { int_kind, fp_kind };

std::string to_string(ReferenceModel m);
ReferenceModel parse_reference_model(std::string_view text);
std::string to_string(FormatKind k);
FormatKind parse_format_kind(std::string_view text);

inline constexpr std::array<ReferenceModel, 3> kReferenceModels{ReferenceModel::resnet18, ReferenceModel::mobilenetv2,
                                                                ReferenceModel::vit_b_32};

struct ModelResult {
  int int_lut;
  double int_accuracy;  // percent
  int fp_lut;
  double fp_accuracy;  // percent
};

struct ReferenceRow {
  int w_bits;
  int a_bits;
  int dot_bitwidth;
  std::array<ModelResult, 3> models;  // indexed like kReferenceModels
};

/// The 21 rows in published order.
std::span<const ReferenceRow> reference_rows();

/// Full-precision top-1 accuracy in percent.
double reference_baseline_accuracy(ReferenceModel m);

/// Throws std::out_of_range for (w, a) pairs that are not tabulated.
int lut_lookup(ReferenceModel model, FormatKind kind, int w_bits, int a_bits);
std::optional<int> find_lut(ReferenceModel model, FormatKind kind, int w_bits, int a_bits);

struct ExpMan {
  int e;
  int m;
  friend bool operator==(const ExpMan&, const ExpMan&) = default;
};

struct BestFormat {
  ReferenceModel model;
  int w_bits;
  int a_bits;
  ExpMan weight;
  ExpMan activation;
};

/// Best minifloat split per model and (w, a).
std::span<const BestFormat> best_format_table();
/// Throws std::out_of_range when not tabulated.
const BestFormat& best_format(ReferenceModel model, int w_bits, int a_bits);

}  // namespace mfq
