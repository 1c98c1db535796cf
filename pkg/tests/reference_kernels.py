"""Brute-force single-image forward kernels, written as plain nested loops.

These are the independent oracle the optimized backends are checked against.
Deliberately no vectorization and no shared code with the package kernels:
padding, window walking and accumulation are all spelled out by hand.
"""

from __future__ import annotations

import math

import numpy as np


def pad_same(x, kernel, stride):
    h, w, c = x.shape
    h_out = math.ceil(h / stride)
    w_out = math.ceil(w / stride)
    pad_h = max((h_out - 1) * stride + kernel - h, 0)
    pad_w = max((w_out - 1) * stride + kernel - w, 0)
    top, left = pad_h // 2, pad_w // 2
    padded = np.zeros((h + pad_h, w + pad_w, c), dtype=np.float64)
    for i in range(h):
        for j in range(w):
            for k in range(c):
                padded[top + i, left + j, k] = x[i, j, k]
    return padded


def conv2d_ref(x, weights, bias, stride, padding):
    """x: (H, W, Cin); weights: (kh, kw, Cin, Cout)."""
    kh, kw, cin, cout = weights.shape
    if padding == "same":
        x = pad_same(x, kh, stride)
    h, w, _ = x.shape
    h_out = (h - kh) // stride + 1
    w_out = (w - kw) // stride + 1
    out = np.zeros((h_out, w_out, cout), dtype=np.float64)
    for i in range(h_out):
        for j in range(w_out):
            for f in range(cout):
                acc = float(bias[f])
                for p in range(kh):
                    for q in range(kw):
                        for c in range(cin):
                            acc += float(x[i * stride + p, j * stride + q, c]) * float(
                                weights[p, q, c, f]
                            )
                out[i, j, f] = acc
    return out


def maxpool_ref(x, kernel, stride):
    h, w, c = x.shape
    h_out = (h - kernel) // stride + 1
    w_out = (w - kernel) // stride + 1
    out = np.zeros((h_out, w_out, c), dtype=np.float64)
    for i in range(h_out):
        for j in range(w_out):
            for k in range(c):
                best = -math.inf
                for p in range(kernel):
                    for q in range(kernel):
                        v = float(x[i * stride + p, j * stride + q, k])
                        if v > best:
                            best = v
                out[i, j, k] = best
    return out


def avgpool_ref(x, kernel, stride):
    h, w, c = x.shape
    h_out = (h - kernel) // stride + 1
    w_out = (w - kernel) // stride + 1
    out = np.zeros((h_out, w_out, c), dtype=np.float64)
    for i in range(h_out):
        for j in range(w_out):
            for k in range(c):
                acc = 0.0
                for p in range(kernel):
                    for q in range(kernel):
                        acc += float(x[i * stride + p, j * stride + q, k])
                out[i, j, k] = acc / (kernel * kernel)
    return out


def dense_ref(x, weights, bias):
    n, m = weights.shape
    out = np.zeros(m, dtype=np.float64)
    for j in range(m):
        acc = float(bias[j])
        for i in range(n):
            acc += float(x[i]) * float(weights[i, j])
        out[j] = acc
    return out


def softmax_ref(logits):
    biggest = max(float(v) for v in logits)
    exps = [math.exp(float(v) - biggest) for v in logits]
    total = sum(exps)
    return np.array([e / total for e in exps])
