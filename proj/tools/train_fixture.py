# Copyright (C) 2026 The minifloat-ptq Authors
# SPDX-License-Identifier: Apache-2.0
"""Trains the small blob CNN used by the tests and writes it as .mqtz.

    python3 tools/train_fixture.py --mfq build/tools/mfq --out tests/fixtures/blob_cnn.mqtz

Data comes from `mfq make-data`, so the network sees exactly the samples the
C++ generator produces (train seed 1, test seed 2).
"""

import argparse
import os
import struct
import subprocess
import tempfile

import numpy as np
import torch
from torch import nn


def read_mqdt(path):
    with open(path, "rb") as f:
        buf = f.read()
    assert buf[:4] == b"MQDT"
    version, count = struct.unpack_from("<II", buf, 4)
    assert version == 1
    off = 12
    xs, ys = [], []
    for _ in range(count):
        (rank,) = struct.unpack_from("<I", buf, off)
        off += 4
        dims = struct.unpack_from("<%dI" % rank, buf, off)
        off += 4 * rank
        n = int(np.prod(dims))
        xs.append(np.frombuffer(buf, dtype="<f8", count=n, offset=off).reshape(dims))
        off += 8 * n
        (label,) = struct.unpack_from("<I", buf, off)
        off += 4
        ys.append(label)
    return torch.tensor(np.stack(xs)), torch.tensor(ys)


class BlobCnn(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 8, 3, padding=1)
        self.conv2 = nn.Conv2d(8, 16, 3, stride=2, padding=1)
        self.conv3 = nn.Conv2d(16, 16, 3, padding=1, groups=4)
        self.fc = nn.Linear(16, 2)

    def forward(self, x):
        r1 = torch.relu(self.conv1(x))
        r2 = torch.relu(self.conv2(r1))
        r3 = torch.relu(self.conv3(r2))
        return self.fc((r2 + r3).mean(dim=(2, 3)))


class Writer:
    def __init__(self):
        self.out = bytearray()

    def u8(self, v):
        self.out += struct.pack("<B", v)

    def u32(self, v):
        self.out += struct.pack("<I", v)

    def text(self, s):
        b = s.encode()
        self.u32(len(b))
        self.out += b

    def tensor(self, t):
        a = t.detach().to(torch.float64).numpy()
        self.u32(a.ndim)
        for d in a.shape:
            self.u32(d)
        self.out += a.astype("<f8").tobytes()


INPUT, LINEAR, CONV, RELU, ADD, POOL = 0, 1, 2, 3, 4, 5


def export(model, path):
    nodes = [
        ("input", INPUT, []),
        ("conv1", CONV, [0]),
        ("relu1", RELU, [1]),
        ("conv2", CONV, [2]),
        ("relu2", RELU, [3]),
        ("conv3", CONV, [4]),
        ("relu3", RELU, [5]),
        ("add", ADD, [4, 6]),
        ("pool", POOL, [7]),
        ("fc", LINEAR, [8]),
    ]
    w = Writer()
    w.out += b"MQTZ"
    w.u32(1)
    w.u32(len(nodes))
    for name, kind, inputs in nodes:
        w.u8(kind)
        w.text(name)
        w.u32(len(inputs))
        for i in inputs:
            w.u32(i)
        if kind == INPUT:
            w.u32(3)
            for d in (1, 8, 8):
                w.u32(d)
        elif kind == CONV:
            conv = getattr(model, name)
            w.u32(conv.stride[0])
            w.u32(conv.padding[0])
            w.u32(conv.groups)
            w.tensor(conv.weight)
            w.tensor(conv.bias)
        elif kind == LINEAR:
            w.tensor(model.fc.weight)
            w.tensor(model.fc.bias)
    w.u32(len(nodes) - 1)
    with open(path, "wb") as f:
        f.write(w.out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mfq", required=True, help="path to the mfq binary")
    ap.add_argument("--out", required=True)
    ap.add_argument("--train-count", type=int, default=4000)
    ap.add_argument("--test-count", type=int, default=1000)
    ap.add_argument("--epochs", type=int, default=60)
    args = ap.parse_args()

    torch.manual_seed(0)
    torch.set_default_dtype(torch.float64)
    with tempfile.TemporaryDirectory() as tmp:
        train_path = os.path.join(tmp, "train.mqdt")
        test_path = os.path.join(tmp, "test.mqdt")
        subprocess.run([args.mfq, "make-data", "--count", str(args.train_count), "--seed", "1", "--out", train_path],
                       check=True)
        subprocess.run([args.mfq, "make-data", "--count", str(args.test_count), "--seed", "2", "--out", test_path],
                       check=True)
        xtr, ytr = read_mqdt(train_path)
        xte, yte = read_mqdt(test_path)

    model = BlobCnn()
    opt = torch.optim.Adam(model.parameters(), lr=3e-3)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.epochs)
    loss_fn = nn.CrossEntropyLoss()
    for epoch in range(args.epochs):
        perm = torch.randperm(len(xtr))
        for i in range(0, len(xtr), 64):
            idx = perm[i:i + 64]
            opt.zero_grad()
            loss_fn(model(xtr[idx]), ytr[idx]).backward()
            opt.step()
        sched.step()
    with torch.no_grad():
        train_acc = (model(xtr).argmax(1) == ytr).double().mean().item()
        test_acc = (model(xte).argmax(1) == yte).double().mean().item()
    params = sum(p.numel() for p in model.parameters())
    print(f"params {params}  train acc {train_acc:.4f}  test acc {test_acc:.4f}")
    export(model, args.out)


if __name__ == "__main__":
    main()
