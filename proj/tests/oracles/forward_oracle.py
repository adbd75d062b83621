#
# Copyright 2026 The upaq Authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Second forward-pass implementation for dense .upaq models.

Convolution accumulates tap by tap in (in, row, col) order over whole
output planes in float32, then adds the bias, so every output pixel sees
the same operation sequence as a scalar loop.

usage: forward_oracle.py model.upaq inputs.bin [--index K] [--golden out.json]
       forward_oracle.py model.upaq inputs.bin --check golden.json
"""

import argparse
import json
import sys

import numpy as np

from upaq_io import floats, read_activations, read_container


def conv2d(layer, blob, x):
    w = floats(blob, layer["weights"]).reshape(layer["weights"]["shape"])
    out_ch, in_ch, kh, kw = w.shape
    stride, pad = layer["stride"], layer["padding"]
    _, h, wd = x.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    xp = np.zeros((in_ch, h + 2 * pad, wd + 2 * pad), dtype=np.float32)
    xp[:, pad:pad + h, pad:pad + wd] = x
    bias = floats(blob, layer["bias"]) if "bias" in layer else np.zeros(out_ch, np.float32)
    y = np.empty((out_ch, oh, ow), dtype=np.float32)
    for o in range(out_ch):
        acc = np.zeros((oh, ow), dtype=np.float32)
        for i in range(in_ch):
            for r in range(kh):
                for c in range(kw):
                    tap = xp[i, r:r + stride * oh:stride, c:c + stride * ow:stride]
                    acc = acc + np.float32(w[o, i, r, c]) * tap
        y[o] = acc + bias[o]
    return y


def linear(layer, blob, x):
    w = floats(blob, layer["weights"]).reshape(layer["weights"]["shape"])[:, :, 0, 0]
    flat = x.reshape(-1)
    bias = floats(blob, layer["bias"]) if "bias" in layer else np.zeros(w.shape[0], np.float32)
    y = np.empty(w.shape[0], dtype=np.float32)
    for o in range(w.shape[0]):
        acc = np.float32(0.0)
        for i in range(w.shape[1]):
            acc = np.float32(acc + np.float32(w[o, i] * flat[i]))
        y[o] = np.float32(acc + bias[o])
    return y.reshape(-1, 1, 1)


def gap(x):
    c, h, w = x.shape
    y = np.empty((c, 1, 1), dtype=np.float32)
    for ch in range(c):
        acc = np.float32(0.0)
        for v in x[ch].reshape(-1):
            acc = np.float32(acc + v)
        y[ch, 0, 0] = np.float32(acc / np.float32(h * w))
    return y


def forward(header, blob, x):
    values = {}
    last = None
    for layer in header["layers"]:
        args = [values[k] for k in layer["inputs"]] or [x]
        kind = layer["kind"]
        if kind == "conv2d":
            y = conv2d(layer, blob, args[0])
        elif kind == "relu":
            y = np.maximum(args[0], np.float32(0.0))
        elif kind == "add":
            y = (args[0] + args[1]).astype(np.float32)
        elif kind == "global_avg_pool":
            y = gap(args[0])
        elif kind == "linear":
            y = linear(layer, blob, args[0])
        else:
            raise ValueError("unknown layer kind " + kind)
        values[layer["id"]] = y
        last = y
    return last.reshape(-1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model")
    ap.add_argument("inputs")
    ap.add_argument("--index", type=int, default=0)
    ap.add_argument("--golden")
    ap.add_argument("--check")
    ap.add_argument("--tol", type=float, default=1e-6)
    args = ap.parse_args()

    magic, header, blob = read_container(args.model)
    if magic != "UPAQ1":
        sys.exit("not a dense model")
    x = read_activations(args.inputs)[args.index]
    y = forward(header, blob, x)

    if args.check:
        with open(args.check) as f:
            golden = json.load(f)
        ref = np.asarray(golden["output"], dtype=np.float64)
        err = np.abs(y.astype(np.float64) - ref) / np.maximum(1.0, np.abs(ref))
        print("max scaled error", float(err.max()))
        sys.exit(0 if err.max() <= args.tol else 1)

    doc = {"model": header["name"], "input_index": args.index,
           "output": [float(v) for v in y]}
    text = json.dumps(doc, indent=2)
    if args.golden:
        with open(args.golden, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


if __name__ == "__main__":
    main()
