"""Evaluate SkelUnet weights from an SKLW file with PyTorch.

    python torch_reference.py net.sklw map.pgm torch_output.f32

Writes the 64x64 sigmoid output as raw little-endian f32, row-major.
"""
import struct
import sys

import numpy as np
import torch
import torch.nn.functional as F


def read_sklw(path):
    data = open(path, "rb").read()
    assert data[:5] == b"SKLW1", "bad magic"
    (n,) = struct.unpack("<I", data[5:9])
    index = data[9 : 9 + n].decode()
    payload = data[9 + n :]
    tensors = {}
    for line in index.splitlines():
        fields = line.split()
        if not fields:
            continue
        name, dims = fields[0], [int(v) for v in fields[1:-2]]
        offset, length = int(fields[-2]), int(fields[-1])
        arr = np.frombuffer(payload[offset : offset + length], dtype="<f4").reshape(dims)
        tensors[name] = torch.from_numpy(arr.copy())
    return tensors


def read_pgm(path):
    data = open(path, "rb").read()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    assert tokens[0] == b"P5"
    w, h = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos + 1 : pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return (pixels == 255).astype(np.float32)


def double_conv(x, t, prefix):
    x = F.relu(F.conv2d(x, t[f"{prefix}.conv1.weight"], t[f"{prefix}.conv1.bias"], padding=1))
    return F.relu(F.conv2d(x, t[f"{prefix}.conv2.weight"], t[f"{prefix}.conv2.bias"], padding=1))


def forward(t, image):
    x = torch.from_numpy(image)[None, None]
    skips = []
    for level in ["enc1", "enc2", "enc3"]:
        x = double_conv(x, t, level)
        skips.append(x)
        x = F.max_pool2d(x, 2)
    x = double_conv(x, t, "bottleneck")
    for level in ["dec3", "dec2", "dec1"]:
        x = F.conv_transpose2d(x, t[f"{level}.up.weight"], t[f"{level}.up.bias"], stride=2)
        x = double_conv(torch.cat([x, skips.pop()], dim=1), t, level)
    return torch.sigmoid(F.conv2d(x, t["head.weight"], t["head.bias"]))[0, 0]


if __name__ == "__main__":
    weights, image, out = sys.argv[1:4]
    with torch.no_grad():
        y = forward(read_sklw(weights), read_pgm(image)).numpy().astype("<f4")
    open(out, "wb").write(y.tobytes())
    print(f"wrote {out}: min {y.min():.4f} max {y.max():.4f} mean {y.mean():.4f}")
