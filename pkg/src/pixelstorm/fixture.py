"""Deterministic quadrant-detector model plus matching labeled images.

The model scores each class by the red-dominant energy pooled over its
quadrant's outer-corner cell of an 8x8 input; the image generator paints a
moderately bright red block exactly there over a dim noisy background.
Weights are hand-set (with tiny seeded jitter) so the classes separate by
construction, yet a handful of well-placed pixel edits can overturn the
decision - which is exactly what an attack test bed needs. Random edits
rarely flip it: scoring regions cover only 4 pixels per class.
"""

from __future__ import annotations

import numpy as np

from .classifier import AvgPool, Conv2D, Dense, Flatten, LayeredModel, ReLU, Softmax

FIXTURE_SHAPE = (8, 8, 3)
FIXTURE_CLASSES = ["quad0", "quad1", "quad2", "quad3"]

# detector mix: rewards red and penalizes green/blue, so only deliberately
# red-dominant edits move the scores and useful edits stay cheap
_CHANNEL_MIX = (0.9, -0.45, -0.45)
_LOGIT_GAIN = 6.0
_CONV_JITTER = 0.01
_DENSE_JITTER = 0.02

# pooled-map cell each class reads: the outer corner of its quadrant
_SCORING_CELLS = ((0, 0), (0, 3), (3, 0), (3, 3))

# image generator levels
_BG_RED_HIGH = 40
_BG_GREEN_BLUE_HIGH = 60
_BLOCK_RED_RANGE = (150, 190)
_BLOCK_SIZE = 2


def make_fixture_model(seed: int = 0) -> LayeredModel:
    """Tiny 4-class model: conv, relu, avgpool, flatten, dense, softmax."""
    rng = np.random.default_rng(seed)

    conv_w = rng.normal(0.0, _CONV_JITTER, size=(3, 3, 3, 2))
    for c, weight in enumerate(_CHANNEL_MIX):
        conv_w[1, 1, c, 0] += weight
    conv_b = np.zeros(2)

    # pooled map is 4x4x2; class q reads channel 0 at its scoring cell
    dense_w = rng.normal(0.0, _DENSE_JITTER, size=(32, 4))
    for q, (row, col) in enumerate(_SCORING_CELLS):
        dense_w[(row * 4 + col) * 2 + 0, q] += _LOGIT_GAIN
    dense_b = np.zeros(4)

    model = LayeredModel(
        input_shape=FIXTURE_SHAPE,
        class_names=list(FIXTURE_CLASSES),
        layers=[
            Conv2D(kernel=3, stride=1, depth=2, padding="same", weights=conv_w, bias=conv_b),
            ReLU(),
            AvgPool(kernel=2, stride=2),
            Flatten(),
            Dense(size=4, weights=dense_w, bias=dense_b),
            Softmax(),
        ],
        metadata={"fixture_seed": seed},
    )
    model.validate()
    return model


def _block_origin(label: int) -> tuple[int, int]:
    row, col = _SCORING_CELLS[label]
    return row * 2, col * 2


def make_fixture_image(label: int, rng: np.random.Generator) -> np.ndarray:
    """One labeled image: noisy dim background, red block on the scoring cell."""
    if not 0 <= label < 4:
        raise ValueError(f"label must be in 0..3, got {label}")
    img = np.empty(FIXTURE_SHAPE, dtype=np.uint8)
    img[:, :, 0] = rng.integers(0, _BG_RED_HIGH + 1, size=(8, 8))
    img[:, :, 1] = rng.integers(0, _BG_GREEN_BLUE_HIGH + 1, size=(8, 8))
    img[:, :, 2] = rng.integers(0, _BG_GREEN_BLUE_HIGH + 1, size=(8, 8))

    r, c = _block_origin(label)
    lo, hi = _BLOCK_RED_RANGE
    block = img[r : r + _BLOCK_SIZE, c : c + _BLOCK_SIZE]
    block[:, :, 0] = rng.integers(lo, hi + 1, size=(_BLOCK_SIZE, _BLOCK_SIZE))
    return img


def make_fixture_dataset(seed: int = 0, count: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Balanced labeled images, deterministic under the seed."""
    rng = np.random.default_rng(seed)
    images = np.empty((count,) + FIXTURE_SHAPE, dtype=np.uint8)
    labels = np.empty(count, dtype=np.int64)
    for i in range(count):
        labels[i] = i % 4
        images[i] = make_fixture_image(int(labels[i]), rng)
    return images, labels


def fixture_probe_image(label: int) -> np.ndarray:
    """Canonical noise-free image: flat background, block on the scoring cell."""
    img = np.full(FIXTURE_SHAPE, 20, dtype=np.uint8)
    r, c = _block_origin(label)
    img[r : r + _BLOCK_SIZE, c : c + _BLOCK_SIZE, 0] = 170
    return img
