"""Vectorized numpy forward kernels; the fallback when the compiled core is absent.

All kernels take a channel-last float64 batch (N, H, W, C) and are written
for whole-population evaluation: one matmul covers every image in the batch.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .common import conv_geometry, pad_images, pool_geometry

NAME = "numpy"


def _windows(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(N, Ho, Wo, kh, kw, C) strided view of every pooling/conv window."""
    view = sliding_window_view(x, (kernel, kernel), axis=(1, 2))
    view = view[:, ::stride, ::stride]
    # axes: N, Ho, Wo, C, kh, kw -> N, Ho, Wo, kh, kw, C
    return view.transpose(0, 1, 2, 4, 5, 3)


def conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int, padding: str) -> np.ndarray:
    n, h, w, cin = x.shape
    kh, kw, wcin, cout = weights.shape
    h_out, w_out, pt, pb, pl, pr = conv_geometry(h, w, kh, stride, padding)
    padded = pad_images(x, pt, pb, pl, pr)
    cols = _windows(padded, kh, stride).reshape(n * h_out * w_out, kh * kw * cin)
    out = cols @ weights.reshape(kh * kw * wcin, cout)
    out += bias
    return out.reshape(n, h_out, w_out, cout)


def maxpool(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    pool_geometry(x.shape[1], x.shape[2], kernel, stride)
    return _windows(x, kernel, stride).max(axis=(3, 4))


def avgpool(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    pool_geometry(x.shape[1], x.shape[2], kernel, stride)
    return _windows(x, kernel, stride).mean(axis=(3, 4))


def dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ weights + bias
