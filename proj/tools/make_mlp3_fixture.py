# Copyright (C) 2026 The minifloat-ptq Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the 3-layer MLP fixture documented in README.md.

    python3 tools/make_mlp3_fixture.py tests/fixtures/mlp3.mqtz
"""

import struct
import sys

FC1 = ([[1.0, -1.0], [0.5, 0.25], [-2.0, 1.0]], [0.0, 0.5, -0.25])
FC2 = ([[1.0, 0.0, -1.0], [0.5, 0.5, 0.5], [-1.0, 2.0, 0.0]], [0.125, 0.0, -0.125])
FC3 = ([[1.0, -1.0, 0.5], [0.0, 1.0, -1.0]], [0.0, 0.25])

INPUT, LINEAR, RELU = 0, 1, 3


def u32(v):
    return struct.pack("<I", v)


def text(s):
    return u32(len(s)) + s.encode()


def tensor(shape, values):
    out = u32(len(shape))
    for d in shape:
        out += u32(d)
    for v in values:
        out += struct.pack("<d", v)
    return out


def linear(w, b):
    flat = [v for row in w for v in row]
    return tensor([len(w), len(w[0])], flat) + tensor([len(b)], b)


def node(kind, name, inputs, payload=b""):
    out = struct.pack("<B", kind) + text(name) + u32(len(inputs))
    for i in inputs:
        out += u32(i)
    return out + payload


def main():
    nodes = [
        node(INPUT, "input", [], u32(1) + u32(2)),
        node(LINEAR, "fc1", [0], linear(*FC1)),
        node(RELU, "relu1", [1]),
        node(LINEAR, "fc2", [2], linear(*FC2)),
        node(RELU, "relu2", [3]),
        node(LINEAR, "fc3", [4], linear(*FC3)),
    ]
    blob = b"MQTZ" + u32(1) + u32(len(nodes)) + b"".join(nodes) + u32(len(nodes) - 1)
    with open(sys.argv[1], "wb") as f:
        f.write(blob)


if __name__ == "__main__":
    main()
