"""Thin wrappers presenting the compiled batch kernels behind the backend API."""

from __future__ import annotations

import numpy as np

from . import _core
from .common import conv_geometry, pool_geometry

NAME = "cython"


def conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, stride: int, padding: str) -> np.ndarray:
    kh = weights.shape[0]
    h_out, w_out, pt, _pb, pl, _pr = conv_geometry(x.shape[1], x.shape[2], kh, stride, padding)
    return _core.conv2d_batch(
        np.ascontiguousarray(x), np.ascontiguousarray(weights),
        np.ascontiguousarray(bias), stride, pt, pl, h_out, w_out,
    )


def maxpool(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    pool_geometry(x.shape[1], x.shape[2], kernel, stride)
    return _core.maxpool_batch(np.ascontiguousarray(x), kernel, stride)


def avgpool(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    pool_geometry(x.shape[1], x.shape[2], kernel, stride)
    return _core.avgpool_batch(np.ascontiguousarray(x), kernel, stride)


def dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return _core.dense_batch(
        np.ascontiguousarray(x), np.ascontiguousarray(weights), np.ascontiguousarray(bias)
    )
