// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// MQTZ model container (layout in README.md). Failures raise
// FileFormatError with a distinct kind for bad magic, version mismatch,
// truncation and malformed content.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfq/graph.hpp"

namespace mfq {

std::vector<uint8_t> serialize_model(const LayerGraph& g);
LayerGraph deserialize_model(const std::vector<uint8_t>& bytes);

void save_model(const LayerGraph& g, const std::string& path);
LayerGraph load_model(const std::string& path);

}  // namespace mfq
