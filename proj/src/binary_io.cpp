// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "mfq/errors.hpp"

namespace mfq::io {

using Kind = FileFormatError::Kind;

void Writer::u32(uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
}

void Writer::f64(double v) {
  const auto bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    bytes_.push_back(static_cast<uint8_t>(bits >> (8 * i)));
  }
}

void Writer::text(const std::string& s) {
  u32(static_cast<uint32_t>(s.size()));
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void Writer::magic(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }

void Writer::tensor(const Tensor& t) {
  u32(static_cast<uint32_t>(t.rank()));
  for (size_t d : t.shape()) {
    if (d > std::numeric_limits<uint32_t>::max()) {
      throw std::length_error("tensor extent does not fit in u32");
    }
    u32(static_cast<uint32_t>(d));
  }
  for (double v : t.data()) {
    f64(v);
  }
}

void Reader::need(size_t n) {
  if (remaining() < n) {
    throw FileFormatError(Kind::truncated, "unexpected end of data at byte " + std::to_string(pos_));
  }
}

uint8_t Reader::u8() {
  need(1);
  return bytes_[pos_++];
}

uint32_t Reader::u32() {
  need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(bytes_[pos_++]) << (8 * i);
  }
  return v;
}

double Reader::f64() {
  need(8);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<uint64_t>(bytes_[pos_++]) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

std::string Reader::text() {
  const uint32_t n = u32();
  need(n);
  std::string s(bytes_.begin() + static_cast<ptrdiff_t>(pos_), bytes_.begin() + static_cast<ptrdiff_t>(pos_ + n));
  pos_ += n;
  return s;
}

void Reader::expect_magic(const char (&tag)[5]) {
  if (remaining() < 4 || std::memcmp(bytes_.data() + pos_, tag, 4) != 0) {
    throw FileFormatError(Kind::bad_magic, std::string("missing '") + tag + "' magic");
  }
  pos_ += 4;
}

Tensor Reader::tensor() {
  const uint32_t rank = u32();
  need(size_t{4} * rank);
  Shape shape(rank);
  size_t count = 1;
  for (auto& d : shape) {
    d = u32();
    if (d != 0 && count > remaining() / d) {
      throw FileFormatError(Kind::truncated, "tensor payload exceeds the remaining data");
    }
    count *= d;
  }
  if (count > remaining() / 8) {
    throw FileFormatError(Kind::truncated, "tensor payload exceeds the remaining data");
  }
  std::vector<double> data(count);
  for (auto& v : data) {
    v = f64();
  }
  return Tensor(std::move(shape), std::move(data));
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FileFormatError(Kind::io, "cannot open '" + path + "'");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw FileFormatError(Kind::io, "cannot write '" + path + "'");
  }
}

}  // namespace mfq::io
