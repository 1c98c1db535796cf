"""Shared geometry helpers for the forward-pass kernels.

Both backends consume pre-padded inputs, so padding math lives here once.
Same-padding splits the total pad with the smaller half on the top/left,
matching the usual convention for even totals.
"""

from __future__ import annotations

import math

import numpy as np


def conv_geometry(h: int, w: int, kernel: int, stride: int, padding: str) -> tuple[int, int, int, int, int, int]:
    """Return (h_out, w_out, pad_top, pad_bottom, pad_left, pad_right)."""
    if padding == "valid":
        if kernel > h or kernel > w:
            raise ValueError(f"kernel {kernel} larger than input {h}x{w} with valid padding")
        return (h - kernel) // stride + 1, (w - kernel) // stride + 1, 0, 0, 0, 0
    if padding == "same":
        h_out = math.ceil(h / stride)
        w_out = math.ceil(w / stride)
        pad_h = max((h_out - 1) * stride + kernel - h, 0)
        pad_w = max((w_out - 1) * stride + kernel - w, 0)
        return h_out, w_out, pad_h // 2, pad_h - pad_h // 2, pad_w // 2, pad_w - pad_w // 2
    raise ValueError(f"unknown padding {padding!r} (expected 'same' or 'valid')")


def pool_geometry(h: int, w: int, kernel: int, stride: int) -> tuple[int, int]:
    """Pooling output size; partial edge windows are not supported."""
    if kernel > h or kernel > w:
        raise ValueError(f"pool kernel {kernel} larger than input {h}x{w}")
    if (h - kernel) % stride != 0 or (w - kernel) % stride != 0:
        raise ValueError(
            f"pool kernel {kernel}/stride {stride} does not tile input {h}x{w} exactly"
        )
    return (h - kernel) // stride + 1, (w - kernel) // stride + 1


def pad_images(x: np.ndarray, pad_top: int, pad_bottom: int, pad_left: int, pad_right: int) -> np.ndarray:
    """Zero-pad a (N, H, W, C) batch on the spatial axes."""
    if pad_top == pad_bottom == pad_left == pad_right == 0:
        return x
    return np.pad(x, ((0, 0), (pad_top, pad_bottom), (pad_left, pad_right), (0, 0)))
