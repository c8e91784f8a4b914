// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfq/binary_io.hpp"
#include "mfq/errors.hpp"
#include "mfq/random.hpp"

namespace mfq {

namespace {

constexpr uint32_t kVersion = 1;
constexpr size_t kSide = 8;

}  // namespace

void Dataset::push_back(Tensor x, uint32_t label) {
  inputs.push_back(std::move(x));
  labels.push_back(label);
}

Dataset Dataset::slice(size_t begin, size_t count) const {
  Dataset out;
  const size_t end = std::min(size(), begin + count);
  for (size_t i = begin; i < end; ++i) {
    out.push_back(inputs[i], labels[i]);
  }
  return out;
}

std::vector<uint8_t> serialize_dataset(const Dataset& data) {
  if (data.inputs.size() != data.labels.size()) {
    throw std::invalid_argument("dataset inputs and labels differ in length");
  }
  io::Writer w;
  w.magic("MQDT");
  w.u32(kVersion);
  w.u32(static_cast<uint32_t>(data.size()));
  for (size_t i = 0; i < data.size(); ++i) {
    w.tensor(data.inputs[i]);
    w.u32(data.labels[i]);
  }
  return w.bytes();
}

Dataset deserialize_dataset(const std::vector<uint8_t>& bytes) {
  io::Reader r(bytes);
  r.expect_magic("MQDT");
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw FileFormatError(FileFormatError::Kind::version_mismatch,
                          "MQDT version " + std::to_string(version) + " is not supported");
  }
  const uint32_t count = r.u32();
  Dataset data;
  for (uint32_t i = 0; i < count; ++i) {
    Tensor x = r.tensor();
    const uint32_t label = r.u32();
    data.push_back(std::move(x), label);
  }
  if (!r.at_end()) {
    throw FileFormatError(FileFormatError::Kind::malformed, "trailing bytes after the last MQDT sample");
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& path) { io::write_file(path, serialize_dataset(data)); }

Dataset load_dataset(const std::string& path) { return deserialize_dataset(io::read_file(path)); }

Dataset make_blob_dataset(size_t count, uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  for (size_t n = 0; n < count; ++n) {
    const uint32_t label = static_cast<uint32_t>(rng.below(2));
    const double cy = rng.uniform(2.5, 4.5);
    const double cx = rng.uniform(2.5, 4.5);
    const double amplitude = rng.uniform(0.6, 1.4);
    double sy = 1.1;
    double sx = 1.1;
    if (label == 1) {
      const bool horizontal = rng.uniform() < 0.5;
      sy = horizontal ? 0.6 : 1.6;
      sx = horizontal ? 1.6 : 0.6;
    }
    Tensor img({1, kSide, kSide});
    for (size_t y = 0; y < kSide; ++y) {
      for (size_t x = 0; x < kSide; ++x) {
        const double dy = (static_cast<double>(y) - cy) / sy;
        const double dx = (static_cast<double>(x) - cx) / sx;
        img[y * kSide + x] = amplitude * std::exp(-0.5 * (dy * dy + dx * dx)) + 0.25 * rng.normal();
      }
    }
    data.push_back(std::move(img), label);
  }
  return data;
}

}  // namespace mfq
