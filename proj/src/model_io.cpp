// Copyright (C) 2026 The minifloat-ptq Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfq/model_io.hpp"

#include "mfq/binary_io.hpp"
#include "mfq/errors.hpp"

namespace mfq {

namespace {

constexpr uint32_t kVersion = 1;

enum Kind : uint8_t { kInput, kLinear, kConv, kRelu, kAdd, kPool, kFlatten, kChannelScale };

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void malformed(const std::string& what) {
  throw FileFormatError(FileFormatError::Kind::malformed, "MQTZ: " + what);
}

void write_node(io::Writer& w, const Node& n) {
  std::visit(overloaded{
                 [&](const InputOp&) { w.u8(kInput); },
                 [&](const LinearOp&) { w.u8(kLinear); },
                 [&](const Conv2dOp&) { w.u8(kConv); },
                 [&](const ReluOp&) { w.u8(kRelu); },
                 [&](const AddOp&) { w.u8(kAdd); },
                 [&](const GlobalAvgPoolOp&) { w.u8(kPool); },
                 [&](const FlattenOp&) { w.u8(kFlatten); },
                 [&](const ChannelScaleOp&) { w.u8(kChannelScale); },
             },
             n.op);
  w.text(n.name);
  w.u32(static_cast<uint32_t>(n.inputs.size()));
  for (size_t in : n.inputs) {
    w.u32(static_cast<uint32_t>(in));
  }
  std::visit(overloaded{
                 [&](const InputOp& op) {
                   w.u32(static_cast<uint32_t>(op.shape.size()));
                   for (size_t d : op.shape) {
                     w.u32(static_cast<uint32_t>(d));
                   }
                 },
                 [&](const LinearOp& op) {
                   w.tensor(op.weight);
                   w.tensor(op.bias);
                 },
                 [&](const Conv2dOp& op) {
                   w.u32(static_cast<uint32_t>(op.stride));
                   w.u32(static_cast<uint32_t>(op.padding));
                   w.u32(static_cast<uint32_t>(op.groups));
                   w.tensor(op.weight);
                   w.tensor(op.bias);
                 },
                 [&](const ChannelScaleOp& op) {
                   w.tensor(Tensor({op.scale.size()}, op.scale));
                 },
                 [](const auto&) {},
             },
             n.op);
}

Op read_op(io::Reader& r, uint8_t kind) {
  switch (kind) {
    case kInput: {
      const uint32_t rank = r.u32();
      if (rank > r.remaining() / 4) {
        throw FileFormatError(FileFormatError::Kind::truncated, "MQTZ: input shape truncated");
      }
      Shape shape(rank);
      for (auto& d : shape) {
        d = r.u32();
      }
      return InputOp{std::move(shape)};
    }
    case kLinear: {
      Tensor w = r.tensor();
      Tensor b = r.tensor();
      return LinearOp{std::move(w), std::move(b)};
    }
    case kConv: {
      Conv2dOp op;
      op.stride = r.u32();
      op.padding = r.u32();
      op.groups = r.u32();
      op.weight = r.tensor();
      op.bias = r.tensor();
      return op;
    }
    case kRelu:
      return ReluOp{};
    case kAdd:
      return AddOp{};
    case kPool:
      return GlobalAvgPoolOp{};
    case kFlatten:
      return FlattenOp{};
    case kChannelScale: {
      Tensor t = r.tensor();
      if (t.rank() != 1) {
        malformed("channel scale must be a vector");
      }
      return ChannelScaleOp{std::vector<double>(t.data().begin(), t.data().end())};
    }
    default:
      malformed("unknown node kind " + std::to_string(kind));
  }
}

}  // namespace

std::vector<uint8_t> serialize_model(const LayerGraph& g) {
  g.validate();
  io::Writer w;
  w.magic("MQTZ");
  w.u32(kVersion);
  w.u32(static_cast<uint32_t>(g.size()));
  for (const Node& n : g.nodes()) {
    write_node(w, n);
  }
  w.u32(static_cast<uint32_t>(g.output_id()));
  return w.bytes();
}

LayerGraph deserialize_model(const std::vector<uint8_t>& bytes) {
  io::Reader r(bytes);
  r.expect_magic("MQTZ");
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw FileFormatError(FileFormatError::Kind::version_mismatch,
                          "MQTZ version " + std::to_string(version) + " is not supported");
  }
  const uint32_t count = r.u32();
  LayerGraph g;
  for (uint32_t id = 0; id < count; ++id) {
    const uint8_t kind = r.u8();
    std::string name = r.text();
    const uint32_t arity = r.u32();
    if (arity > 2) {
      malformed("node '" + name + "' has " + std::to_string(arity) + " inputs");
    }
    std::vector<size_t> inputs(arity);
    for (auto& in : inputs) {
      in = r.u32();
      if (in >= id) {
        malformed("node '" + name + "' references a later node");
      }
    }
    g.add(std::move(name), read_op(r, kind), std::move(inputs));
  }
  const uint32_t out = r.u32();
  if (!r.at_end()) {
    malformed("trailing bytes after the output id");
  }
  if (out >= count) {
    malformed("output id out of range");
  }
  g.set_output(out);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    malformed(e.what());
  }
  return g;
}

void save_model(const LayerGraph& g, const std::string& path) { io::write_file(path, serialize_model(g)); }

LayerGraph load_model(const std::string& path) { return deserialize_model(io::read_file(path)); }

}  // namespace mfq
