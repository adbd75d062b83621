#
# Copyright 2026 The upaq Authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Symmetric per-kernel quantizer written from the formulas alone.

alpha = max|x|, scale = alpha / (2^(b-1) - 1) rounded to float32,
q = round-half-away(x / scale) clipped to +-(2^(b-1) - 1),
sqnr = var(x) / var(x - q * scale).
Checks the worked example and prints the frozen values.
"""

import math
import sys

import numpy as np


def round_half_away(v):
    return math.floor(abs(v) + 0.5) * (1 if v >= 0 else -1)


def quantize(x, bits):
    x = np.asarray(x, dtype=np.float32)
    qmax = 2 ** (bits - 1) - 1
    alpha = float(np.max(np.abs(x)))
    scale = np.float32(alpha / qmax) if alpha > 0 else np.float32(1.0)
    q = [max(-qmax, min(qmax, round_half_away(float(v) / float(scale)))) for v in x]
    x_hat = np.array([np.float32(k * float(scale)) for k in q], dtype=np.float32)
    noise = np.var(x.astype(np.float64) - x_hat.astype(np.float64))
    signal = np.var(x.astype(np.float64))
    sqnr = 1e12 if noise < 1e-30 else signal / noise
    return q, float(scale), x_hat, sqnr


def main():
    q, scale, x_hat, sqnr = quantize([1.0, -2.0, 0.5, 0.0], 8)
    print("q", q)
    print("scale", repr(scale))
    print("x_hat", [repr(float(v)) for v in x_hat])
    print("sqnr_db", 10 * math.log10(sqnr))
    ok = (q == [64, -127, 32, 0]
          and float(x_hat[0]) == 1.0078740119934082
          and float(x_hat[2]) == 0.5039370059967041)
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
