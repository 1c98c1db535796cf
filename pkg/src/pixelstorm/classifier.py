"""Layered CNN inference: the black-box oracle the attack queries.

Models are sequences of conv/pool/dense/softmax layers loaded from a JSON
interchange file (decimal floats, flat row-major weights). The forward pass
accepts raw uint8 images and normalizes to [0, 1] at this boundary, so
callers never pre-scale. All shapes are validated once at load time.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .kernels import get_backend
from .kernels.common import conv_geometry, pool_geometry


class ModelError(ValueError):
    """Malformed model file or incompatible layer shapes."""


@dataclass
class Conv2D:
    kernel: int
    stride: int
    depth: int
    padding: str
    weights: np.ndarray  # (kh, kw, cin, cout)
    bias: np.ndarray     # (cout,)

    kind = "conv2d"


@dataclass
class ReLU:
    kind = "relu"


@dataclass
class MaxPool:
    kernel: int
    stride: int

    kind = "maxpool"


@dataclass
class AvgPool:
    kernel: int
    stride: int

    kind = "avgpool"


@dataclass
class Flatten:
    kind = "flatten"


@dataclass
class Dense:
    size: int
    weights: np.ndarray  # (n_in, size)
    bias: np.ndarray     # (size,)

    kind = "dense"


@dataclass
class Softmax:
    kind = "softmax"


Layer = Union[Conv2D, ReLU, MaxPool, AvgPool, Flatten, Dense, Softmax]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted exponential normalization along the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class LayeredModel:
    input_shape: tuple[int, int, int]  # (h, w, c)
    class_names: list[str]
    layers: list[Layer]
    metadata: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def validate(self) -> None:
        """Walk shapes through every layer; raise ModelError with the layer index."""
        shape: tuple = self.input_shape
        if len(shape) != 3 or any(int(s) <= 0 for s in shape):
            raise ModelError(f"input_shape must be three positive sizes, got {shape}")
        for idx, layer in enumerate(self.layers):
            try:
                shape = _propagate(shape, layer)
            except Exception as exc:
                raise ModelError(f"layer {idx} ({layer.kind}): {exc}") from exc
        if not self.layers or self.layers[-1].kind != "softmax":
            raise ModelError("final layer must be softmax")
        if shape != (self.num_classes,):
            raise ModelError(
                f"model output shape {shape} does not match {self.num_classes} class names"
            )


def _propagate(shape: tuple, layer: Layer) -> tuple:
    if layer.kind == "conv2d":
        if len(shape) != 3:
            raise ValueError(f"conv2d needs a (h, w, c) input, got {shape}")
        h, w, c = shape
        kh, kw, cin, cout = layer.weights.shape
        if kh != layer.kernel or kw != layer.kernel:
            raise ValueError(f"weights kernel {kh}x{kw} does not match declared {layer.kernel}")
        if cin != c:
            raise ValueError(f"weights expect {cin} input channels, input has {c}")
        if cout != layer.depth:
            raise ValueError(f"weights yield depth {cout}, declared {layer.depth}")
        if layer.bias.shape != (cout,):
            raise ValueError(f"bias shape {layer.bias.shape}, expected ({cout},)")
        h_out, w_out, *_ = conv_geometry(h, w, layer.kernel, layer.stride, layer.padding)
        return (h_out, w_out, cout)
    if layer.kind in ("maxpool", "avgpool"):
        if len(shape) != 3:
            raise ValueError(f"pooling needs a (h, w, c) input, got {shape}")
        h, w, c = shape
        h_out, w_out = pool_geometry(h, w, layer.kernel, layer.stride)
        return (h_out, w_out, c)
    if layer.kind == "relu":
        return shape
    if layer.kind == "flatten":
        return (int(np.prod(shape)),)
    if layer.kind == "dense":
        if len(shape) != 1:
            raise ValueError(f"dense needs a flat input, got {shape}; add a flatten layer")
        n = shape[0]
        if layer.weights.shape != (n, layer.size):
            raise ValueError(f"weight matrix {layer.weights.shape}, expected ({n}, {layer.size})")
        if layer.bias.shape != (layer.size,):
            raise ValueError(f"bias shape {layer.bias.shape}, expected ({layer.size},)")
        return (layer.size,)
    if layer.kind == "softmax":
        if len(shape) != 1:
            raise ValueError(f"softmax needs a flat input, got {shape}")
        return shape
    raise ValueError(f"unknown layer kind {layer.kind!r}")


def _layer_from_dict(idx: int, entry: dict) -> Layer:
    kind = entry.get("kind")
    try:
        if kind == "conv2d":
            kernel = int(entry["kernel"])
            depth = int(entry["depth"])
            weights = np.asarray(entry["weights"], dtype=np.float64)
            cin = weights.size // (kernel * kernel * depth) if kernel and depth else 0
            if kernel * kernel * cin * depth != weights.size:
                raise ValueError(
                    f"conv2d weights length {weights.size} does not factor as "
                    f"kernel*kernel*cin*depth for kernel={kernel}, depth={depth}"
                )
            return Conv2D(
                kernel=kernel,
                stride=int(entry["stride"]),
                depth=depth,
                padding=str(entry["padding"]),
                weights=weights.reshape(kernel, kernel, cin, depth),
                bias=np.asarray(entry["bias"], dtype=np.float64),
            )
        if kind == "relu":
            return ReLU()
        if kind == "maxpool":
            return MaxPool(kernel=int(entry["kernel"]), stride=int(entry["stride"]))
        if kind == "avgpool":
            return AvgPool(kernel=int(entry["kernel"]), stride=int(entry["stride"]))
        if kind == "flatten":
            return Flatten()
        if kind == "dense":
            size = int(entry["size"])
            weights = np.asarray(entry["weights"], dtype=np.float64)
            if size <= 0 or weights.size % size != 0:
                raise ValueError(f"dense weights length {weights.size} not divisible by size {size}")
            return Dense(size=size, weights=weights.reshape(-1, size), bias=np.asarray(entry["bias"], dtype=np.float64))
        if kind == "softmax":
            return Softmax()
    except Exception as exc:
        raise ModelError(f"layer {idx} ({kind}): {exc}") from exc
    raise ModelError(f"layer {idx}: unknown layer kind {kind!r}")


def model_from_dict(data: dict) -> LayeredModel:
    try:
        input_shape = tuple(int(v) for v in data["input_shape"])
        class_names = [str(c) for c in data["classes"]]
        raw_layers = data["layers"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"missing or malformed top-level field: {exc}") from exc
    layers = [_layer_from_dict(i, entry) for i, entry in enumerate(raw_layers)]
    model = LayeredModel(
        input_shape=input_shape,  # type: ignore[arg-type]
        class_names=class_names,
        layers=layers,
        metadata=dict(data.get("metadata", {})),
    )
    model.validate()
    return model


def model_to_dict(model: LayeredModel) -> dict:
    layers = []
    for layer in model.layers:
        if layer.kind == "conv2d":
            layers.append(
                {
                    "kind": "conv2d",
                    "kernel": layer.kernel,
                    "stride": layer.stride,
                    "depth": layer.depth,
                    "padding": layer.padding,
                    "weights": [float(v) for v in layer.weights.ravel()],
                    "bias": [float(v) for v in layer.bias.ravel()],
                }
            )
        elif layer.kind in ("maxpool", "avgpool"):
            layers.append({"kind": layer.kind, "kernel": layer.kernel, "stride": layer.stride})
        elif layer.kind == "dense":
            layers.append(
                {
                    "kind": "dense",
                    "size": layer.size,
                    "weights": [float(v) for v in layer.weights.ravel()],
                    "bias": [float(v) for v in layer.bias.ravel()],
                }
            )
        else:
            layers.append({"kind": layer.kind})
    out = {
        "input_shape": list(model.input_shape),
        "classes": list(model.class_names),
        "layers": layers,
    }
    if model.metadata:
        out["metadata"] = model.metadata
    return out


def load_model(path: str | Path) -> LayeredModel:
    """Parse and shape-check a model file; the only place weights enter."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_dict(data)


def save_model(model: LayeredModel, path: str | Path) -> None:
    model.validate()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def classify_batch(model: LayeredModel, images: np.ndarray, backend=None) -> np.ndarray:
    """Forward a (N, H, W, C) uint8 batch to per-class probabilities (N, K)."""
    backend = backend if backend is not None else get_backend()
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[1:] != tuple(model.input_shape):
        raise ModelError(
            f"input batch shape {images.shape[1:]} does not match model input {tuple(model.input_shape)}"
        )
    x = images.astype(np.float64) / 255.0
    for layer in model.layers:
        if layer.kind == "conv2d":
            x = backend.conv2d(x, layer.weights, layer.bias, layer.stride, layer.padding)
        elif layer.kind == "relu":
            x = np.maximum(x, 0.0, out=x)
        elif layer.kind == "maxpool":
            x = backend.maxpool(x, layer.kernel, layer.stride)
        elif layer.kind == "avgpool":
            x = backend.avgpool(x, layer.kernel, layer.stride)
        elif layer.kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        elif layer.kind == "dense":
            x = backend.dense(x, layer.weights, layer.bias)
        elif layer.kind == "softmax":
            x = softmax(x)
        else:  # pragma: no cover - validate() rejects unknown kinds
            raise ModelError(f"unknown layer kind {layer.kind!r}")
    return x


def classify(model: LayeredModel, image: np.ndarray, backend=None) -> np.ndarray:
    """Forward one raw image to a probability vector."""
    image = np.asarray(image)
    if image.shape != tuple(model.input_shape):
        raise ModelError(
            f"image shape {image.shape} does not match model input {tuple(model.input_shape)}"
        )
    return classify_batch(model, image[None, ...], backend=backend)[0]


@dataclass
class OracleStats:
    query_count: int = 0
    wall_time: float = 0.0


class ModelOracle:
    """Black-box wrapper: image in, probability vector out, queries counted.

    The backend is held by name (not as a module) so oracles pickle cleanly
    into campaign worker processes.
    """

    def __init__(self, model: LayeredModel, backend_name: str | None = None):
        self.model = model
        self.backend_name = backend_name
        self.stats = OracleStats()

    @property
    def class_names(self) -> list[str]:
        return self.model.class_names

    @property
    def num_classes(self) -> int:
        return self.model.num_classes

    def classify(self, image: np.ndarray) -> np.ndarray:
        start = time.perf_counter()
        probs = classify(self.model, image, backend=get_backend(self.backend_name))
        self.stats.query_count += 1
        self.stats.wall_time += time.perf_counter() - start
        return probs

    def classify_batch(self, images: np.ndarray) -> np.ndarray:
        start = time.perf_counter()
        probs = classify_batch(self.model, images, backend=get_backend(self.backend_name))
        self.stats.query_count += images.shape[0]
        self.stats.wall_time += time.perf_counter() - start
        return probs
