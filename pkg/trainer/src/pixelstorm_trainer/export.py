"""Export a trained SmallConvNet to the attack toolkit's model JSON format.

Two layout conversions happen here: conv kernels go from torch's
(out, in, kh, kw) to the format's row-major (kh, kw, in, out), and the head
matrix is re-indexed from torch's channel-first flatten (c, h, w) to the
format's channel-last flatten (h, w, c). Weights are written as decimal
literals, which round-trip float64 exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .net import SmallConvNet


def _conv_entry(layer, padding: str = "same") -> dict:
    weights = layer.weight.detach().numpy().astype(np.float64)
    out_ch, _in_ch, kh, _kw = weights.shape
    reordered = weights.transpose(2, 3, 1, 0)  # -> (kh, kw, in, out)
    return {
        "kind": "conv2d",
        "kernel": kh,
        "stride": 1,
        "depth": out_ch,
        "padding": padding,
        "weights": [float(v) for v in reordered.ravel()],
        "bias": [float(v) for v in layer.bias.detach().numpy().astype(np.float64)],
    }


def _head_entry(layer, side: int, channels: int) -> dict:
    weights = layer.weight.detach().numpy().astype(np.float64)  # (classes, c*h*w)
    classes = weights.shape[0]
    chw = weights.reshape(classes, channels, side, side)
    hwc = chw.transpose(0, 2, 3, 1).reshape(classes, -1)  # -> (classes, h*w*c)
    return {
        "kind": "dense",
        "size": classes,
        "weights": [float(v) for v in hwc.T.ravel()],  # row-major (n_in, classes)
        "bias": [float(v) for v in layer.bias.detach().numpy().astype(np.float64)],
    }


def model_document(model: SmallConvNet, class_names: list[str], metadata: dict | None = None) -> dict:
    if len(class_names) != model.num_classes:
        raise ValueError(f"{len(class_names)} class names for a {model.num_classes}-way head")
    side = model.input_side
    doc = {
        "input_shape": [side, side, 3],
        "classes": list(class_names),
        "layers": [
            _conv_entry(model.conv1),
            {"kind": "relu"},
            {"kind": "avgpool", "kernel": 2, "stride": 2},
            _conv_entry(model.conv2),
            {"kind": "relu"},
            {"kind": "avgpool", "kernel": 2, "stride": 2},
            {"kind": "flatten"},
            _head_entry(model.head, side // 4, 32),
            {"kind": "softmax"},
        ],
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def export_model(model: SmallConvNet, class_names: list[str], path: str | Path,
                 metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_document(model, class_names, metadata), fh)
        fh.write("\n")
