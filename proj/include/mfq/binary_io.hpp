// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian byte buffers shared by the MQTZ and MQDT containers.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfq/tensor.hpp"

namespace mfq::io {

class Writer {
 public:
  void u8(uint8_t v) { bytes_.push_back(v); }
  void u32(uint32_t v);
  void f64(double v);
  void text(const std::string& s);
  void magic(const char (&tag)[5]);
  void tensor(const Tensor& t);

  const std::vector<uint8_t>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

/// Throws FileFormatError(truncated) when reading past the end.
class Reader {
 public:
  explicit Reader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}

  uint8_t u8();
  uint32_t u32();
  double f64();
  std::string text();
  /// Throws FileFormatError(bad_magic) on mismatch.
  void expect_magic(const char (&tag)[5]);
  Tensor tensor();

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(size_t n);

  const std::vector<uint8_t>& bytes_;
  size_t pos_ = 0;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace mfq::io
