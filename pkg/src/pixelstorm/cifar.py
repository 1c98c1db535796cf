"""CIFAR-10 binary batch format: 1 label byte + 3072 channel-planar bytes."""

from __future__ import annotations

from pathlib import Path

import numpy as np

RECORD_BYTES = 3073
IMAGE_SIDE = 32
CIFAR10_CLASSES = [
    "airplane", "automobile", "bird", "cat", "deer",
    "dog", "frog", "horse", "ship", "truck",
]


class CifarFormatError(ValueError):
    pass


def load_cifar10_batch(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Decode a batch file to interleaved (N, 32, 32, 3) uint8 images + labels."""
    raw = np.fromfile(str(path), dtype=np.uint8)
    if raw.size == 0 or raw.size % RECORD_BYTES != 0:
        raise CifarFormatError(
            f"truncated record: file size {raw.size} is not a positive multiple of {RECORD_BYTES}"
        )
    records = raw.reshape(-1, RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    if labels.max(initial=0) > 9:
        bad = int(np.argmax(labels > 9))
        raise CifarFormatError(f"record {bad}: label {labels[bad]} out of range 0..9")
    planes = records[:, 1:].reshape(-1, 3, IMAGE_SIDE, IMAGE_SIDE)
    images = planes.transpose(0, 2, 3, 1).copy()
    return images, labels


def write_cifar10_batch(path: str | Path, images: np.ndarray, labels: np.ndarray) -> None:
    """Encode interleaved images back to the channel-planar batch format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels)
    if images.ndim != 4 or images.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE, 3):
        raise CifarFormatError(f"images must be (N, 32, 32, 3), got {images.shape}")
    if labels.shape != (images.shape[0],):
        raise CifarFormatError("labels must parallel images")
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 9:
        raise CifarFormatError("labels must be in 0..9")
    records = np.empty((images.shape[0], RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = labels
    records[:, 1:] = images.transpose(0, 3, 1, 2).reshape(images.shape[0], -1)
    records.tofile(str(path))
