// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mfq {

/// Inconsistent recipe / calibration table / graph combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems reading MQTZ / MQDT containers. Each failure mode has its own kind.
class FileFormatError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, malformed, io };

  FileFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mfq
