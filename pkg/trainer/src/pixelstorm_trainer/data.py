"""Datasets for victim training: CIFAR-10 binary batches and two synthetic
generators (a tiny 4-class quadrant set and a CIFAR-shaped 10-class set).

The synthetic CIFAR-shaped classes carry a localized single-channel patch
whose strength varies widely per image, so a trained net ends up with many
near-boundary samples - the regime a few-pixel attack needs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

CIFAR_RECORD_BYTES = 3073
CIFAR_SIDE = 32

QUADRANT_CLASSES = ["quad0", "quad1", "quad2", "quad3"]
TEXTURE_CLASSES = [f"patch{k}" for k in range(10)]

# top-left corners of the 4x4 class patches on the 32x32 canvas
_PATCH_ANCHORS = [
    (2, 2), (2, 14), (2, 26), (14, 2), (14, 14),
    (14, 26), (26, 2), (26, 14), (26, 26), (8, 8),
]
_PATCH_SIDE = 4


def load_cifar_batches(paths: list[str | Path]) -> tuple[np.ndarray, np.ndarray]:
    """Read one or more CIFAR-10 binary batch files into (N, 32, 32, 3) uint8."""
    images = []
    labels = []
    for path in paths:
        raw = np.fromfile(str(path), dtype=np.uint8)
        if raw.size == 0 or raw.size % CIFAR_RECORD_BYTES != 0:
            raise ValueError(f"{path}: not a CIFAR-10 binary batch (size {raw.size})")
        records = raw.reshape(-1, CIFAR_RECORD_BYTES)
        labels.append(records[:, 0].astype(np.int64))
        planes = records[:, 1:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE)
        images.append(planes.transpose(0, 2, 3, 1))
    return np.concatenate(images), np.concatenate(labels)


def write_cifar_batch(path: str | Path, images: np.ndarray, labels: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    records = np.empty((images.shape[0], CIFAR_RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = labels
    records[:, 1:] = images.transpose(0, 3, 1, 2).reshape(images.shape[0], -1)
    records.tofile(str(path))


def synthetic_quadrant(seed: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """4 classes on 8x8x3: a bright 2x2 block somewhere in the labeled quadrant."""
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 60, size=(count, 8, 8, 3)).astype(np.uint8)
    labels = rng.integers(0, 4, size=count).astype(np.int64)
    for i, label in enumerate(labels):
        r0 = 0 if label < 2 else 4
        c0 = 0 if label % 2 == 0 else 4
        r = r0 + int(rng.integers(0, 3))
        c = c0 + int(rng.integers(0, 3))
        images[i, r : r + 2, c : c + 2, :] = rng.integers(160, 240, size=(2, 2, 3))
    return images, labels


def _add_patch(images: np.ndarray, i: int, label: int, strength: int) -> None:
    r, c = _PATCH_ANCHORS[label]
    images[i, r : r + _PATCH_SIDE, c : c + _PATCH_SIDE, label % 3] += strength


def synthetic_textures(seed: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """10 CIFAR-shaped classes: noisy canvas, a class-located patch, and a
    weaker distractor patch of another class.

    The distractor's strength runs right up to the true patch's, so plenty
    of images sit close to a decision boundary - the population a few-pixel
    attack preys on - while the label stays identifiable.
    """
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 120, size=(count, CIFAR_SIDE, CIFAR_SIDE, 3)).astype(np.int16)
    labels = rng.integers(0, 10, size=count).astype(np.int64)
    for i, label in enumerate(labels):
        strength = int(rng.integers(30, 150))
        _add_patch(images, i, int(label), strength)
        distractor = int((label + rng.integers(1, 10)) % 10)
        _add_patch(images, i, distractor, int(rng.integers(0, strength)))
    return np.clip(images, 0, 255).astype(np.uint8), labels


def train_val_split(images: np.ndarray, labels: np.ndarray, val_fraction: float,
                    seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = images.shape[0]
    order = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(n * val_fraction))
    val_idx, train_idx = order[:n_val], order[n_val:]
    return images[train_idx], labels[train_idx], images[val_idx], labels[val_idx]
