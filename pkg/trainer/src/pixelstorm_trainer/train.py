"""End-to-end training runs: data in, validated model JSON out."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    QUADRANT_CLASSES,
    TEXTURE_CLASSES,
    load_cifar_batches,
    synthetic_quadrant,
    synthetic_textures,
    train_val_split,
)
from .export import export_model
from .net import SmallConvNet, accuracy, train

CIFAR_CLASSES = [
    "airplane", "automobile", "bird", "cat", "deer",
    "dog", "frog", "horse", "ship", "truck",
]


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainSpec:
    """One training run: a data source, the fixed architecture, an output path."""

    output_path: str | Path
    dataset_paths: list[str] = field(default_factory=list)
    synthetic: str | None = None          # "quadrant" | "textures"
    synthetic_count: int = 6000
    limit: int | None = None              # cap on training images (after split)
    epochs: int = 5
    batch_size: int = 64
    learning_rate: float = 1e-3
    val_fraction: float = 0.15
    min_accuracy: float = 0.45
    seed: int = 0


@dataclass
class TrainResult:
    model: SmallConvNet
    class_names: list[str]
    validation_accuracy: float
    train_count: int
    output_path: Path


def _load(spec: TrainSpec) -> tuple[np.ndarray, np.ndarray, list[str]]:
    if spec.synthetic == "quadrant":
        images, labels = synthetic_quadrant(spec.seed, spec.synthetic_count)
        return images, labels, list(QUADRANT_CLASSES)
    if spec.synthetic == "textures":
        images, labels = synthetic_textures(spec.seed, spec.synthetic_count)
        return images, labels, list(TEXTURE_CLASSES)
    if spec.synthetic is not None:
        raise TrainingError(f"unknown synthetic dataset {spec.synthetic!r}")
    if not spec.dataset_paths:
        raise TrainingError("either dataset paths or a synthetic flag is required")
    for path in spec.dataset_paths:
        if not Path(path).exists():
            raise TrainingError(f"dataset file not found: {path}")
    images, labels = load_cifar_batches(spec.dataset_paths)
    return images, labels, list(CIFAR_CLASSES)


def train_and_export(spec: TrainSpec) -> TrainResult:
    """Train the fixed small net, gate on validation accuracy, export JSON.

    Below the accuracy floor nothing is written and a TrainingError is
    raised; an exported file always holds a model that cleared the gate,
    with the measured accuracy in its metadata.
    """
    images, labels, class_names = _load(spec)
    train_x, train_y, val_x, val_y = train_val_split(
        images, labels, spec.val_fraction, spec.seed
    )
    if spec.limit is not None:
        train_x, train_y = train_x[: spec.limit], train_y[: spec.limit]
    if train_x.shape[0] == 0:
        raise TrainingError("no training images after split/limit")

    import torch

    torch.manual_seed(spec.seed)  # parameter init draws from the global RNG
    model = SmallConvNet(input_side=images.shape[1], num_classes=len(class_names))
    train(
        model, train_x, train_y,
        epochs=spec.epochs, batch_size=spec.batch_size,
        learning_rate=spec.learning_rate, seed=spec.seed,
    )
    val_accuracy = accuracy(model, val_x, val_y)
    if val_accuracy < spec.min_accuracy:
        raise TrainingError(
            f"validation accuracy {val_accuracy:.3f} below the floor {spec.min_accuracy:.2f}; "
            "not exporting"
        )

    output = Path(spec.output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    export_model(
        model, class_names, output,
        metadata={
            "validation_accuracy": round(val_accuracy, 4),
            "train_images": int(train_x.shape[0]),
            "epochs": spec.epochs,
            "seed": spec.seed,
        },
    )
    return TrainResult(
        model=model,
        class_names=class_names,
        validation_accuracy=val_accuracy,
        train_count=int(train_x.shape[0]),
        output_path=output,
    )
