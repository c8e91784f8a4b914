// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Labeled sample sets, the MQDT container, and the synthetic blob task.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfq/tensor.hpp"

namespace mfq {

struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<uint32_t> labels;

  size_t size() const noexcept { return inputs.size(); }
  void push_back(Tensor x, uint32_t label);
  /// Samples [begin, begin + count) clipped to the set size.
  Dataset slice(size_t begin, size_t count) const;
};

std::vector<uint8_t> serialize_dataset(const Dataset& data);
Dataset deserialize_dataset(const std::vector<uint8_t>& bytes);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

/// 1x8x8 images. Class 0 is a round Gaussian blob, class 1 an elongated one
/// lying horizontally or vertically. Position, amplitude and pixel noise are
/// random, so the classes overlap a little.
Dataset make_blob_dataset(size_t count, uint64_t seed);

}  // namespace mfq
