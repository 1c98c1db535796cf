"""Pixel-edit genomes: application to images, distortion cost, attack fitness.

A genome is ``d`` records of ``[x, y, r, g, b]``. Applying it REPLACES the
three channels of each targeted pixel with the record's values, so the result
never needs a second clamp and at most ``d`` pixels differ from the original.
Coordinates and channels live as reals inside the optimizer and are rounded
half-to-even only at the image boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import RECORD_SIZE

#: value the printed cost formula divides channel deltas by (kept as printed,
#: although 255 is the actual channel maximum; the difference is < 0.4%)
COST_NORMALIZER = 256.0

DEFAULT_EDIT_COUNT = 5


@dataclass(frozen=True)
class PixelEdit:
    x: int  # column
    y: int  # row
    r: int
    g: int
    b: int


@dataclass(frozen=True)
class FitnessParams:
    """Weights of the two fitness terms; lower fitness is better."""

    w_prob: float = 0.25
    w_cost: float = 0.75

    def __post_init__(self) -> None:
        if self.w_prob < 0 or self.w_cost < 0:
            raise ValueError("fitness weights must be nonnegative")


DEFAULT_FITNESS_PARAMS = FitnessParams()


@dataclass(frozen=True)
class PerturbationGenome:
    """Exactly ``d`` pixel edits; round-trips losslessly to a flat 5d vector."""

    edits: tuple[PixelEdit, ...]

    @property
    def d(self) -> int:
        return len(self.edits)

    @classmethod
    def from_flat(cls, values: Sequence[float] | np.ndarray, image_shape: tuple[int, ...]) -> "PerturbationGenome":
        """Decode a flat engine genome, rounding and clamping into the image."""
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size % RECORD_SIZE != 0:
            raise ValueError(f"flat genome length must be a multiple of {RECORD_SIZE}, got {arr.shape}")
        height, width = image_shape[0], image_shape[1]
        rounded = np.rint(arr).astype(np.int64).reshape(-1, RECORD_SIZE)
        edits = []
        for x, y, r, g, b in rounded:
            edits.append(
                PixelEdit(
                    x=int(np.clip(x, 0, width - 1)),
                    y=int(np.clip(y, 0, height - 1)),
                    r=int(np.clip(r, 0, 255)),
                    g=int(np.clip(g, 0, 255)),
                    b=int(np.clip(b, 0, 255)),
                )
            )
        return cls(edits=tuple(edits))

    def to_flat(self) -> np.ndarray:
        out = np.empty(self.d * RECORD_SIZE, dtype=np.float64)
        for i, e in enumerate(self.edits):
            out[i * RECORD_SIZE : (i + 1) * RECORD_SIZE] = (e.x, e.y, e.r, e.g, e.b)
        return out

    def to_json_dict(self) -> dict:
        return {"edits": [{"x": e.x, "y": e.y, "r": e.r, "g": e.g, "b": e.b} for e in self.edits]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "PerturbationGenome":
        return cls(
            edits=tuple(
                PixelEdit(x=int(e["x"]), y=int(e["y"]), r=int(e["r"]), g=int(e["g"]), b=int(e["b"]))
                for e in data["edits"]
            )
        )


def genome_bounds(image_shape: tuple[int, ...] | np.ndarray, d: int) -> list[tuple[float, float]]:
    """Engine bounds for ``d`` edits on an image: coordinates then channels."""
    if hasattr(image_shape, "shape"):
        image_shape = image_shape.shape
    height, width = int(image_shape[0]), int(image_shape[1])
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    per_record = [
        (0.0, float(width - 1)),
        (0.0, float(height - 1)),
        (0.0, 255.0),
        (0.0, 255.0),
        (0.0, 255.0),
    ]
    return per_record * d


def attack_init(image_shape: tuple[int, ...] | np.ndarray, d: int):
    """Population initializer: uniform coordinates, N(128, 127) channel values.

    Channel samples run off the valid range on purpose; the engine clamps
    them, which piles some mass onto 0 and 255.
    """
    if hasattr(image_shape, "shape"):
        image_shape = image_shape.shape
    height, width = int(image_shape[0]), int(image_shape[1])

    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        coords = rng.uniform([0.0, 0.0], [width - 1, height - 1], size=(count, d, 2))
        channels = rng.normal(128.0, 127.0, size=(count, d, 3))
        return np.concatenate([coords, channels], axis=2).reshape(count, d * RECORD_SIZE)

    return sample


def _edit_table(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Flat genome -> integer edit rows (y, x, r, g, b), rounded and clamped."""
    recs = np.rint(np.asarray(values, dtype=np.float64).reshape(-1, RECORD_SIZE)).astype(np.int64)
    table = np.empty_like(recs)
    table[:, 0] = np.clip(recs[:, 1], 0, height - 1)
    table[:, 1] = np.clip(recs[:, 0], 0, width - 1)
    table[:, 2:] = np.clip(recs[:, 2:], 0, 255)
    return table


def apply_flat(image: np.ndarray, values: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Apply a flat genome to an image; later edits to the same pixel win."""
    if out is None:
        out = image.copy()
    else:
        np.copyto(out, image)
    table = _edit_table(values, image.shape[0], image.shape[1])
    out[table[:, 0], table[:, 1]] = table[:, 2:]
    return out


def apply_genome(image: np.ndarray, genome: "PerturbationGenome | np.ndarray | Sequence[float]") -> np.ndarray:
    """Apply a genome (decoded or flat) to an image, returning a new image."""
    if isinstance(genome, PerturbationGenome):
        flat = genome.to_flat()
    else:
        flat = np.asarray(genome, dtype=np.float64)
    if flat.size == 0:
        return image.copy()
    return apply_flat(image, flat)


def apply_batch(image: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply each row of a genome matrix to copies of one image."""
    n = matrix.shape[0]
    out = np.repeat(image[None, ...], n, axis=0)
    recs = np.rint(matrix.reshape(n, -1, RECORD_SIZE)).astype(np.int64)
    rows = np.clip(recs[:, :, 1], 0, image.shape[0] - 1)
    cols = np.clip(recs[:, :, 0], 0, image.shape[1] - 1)
    vals = np.clip(recs[:, :, 2:], 0, 255)
    for i in range(n):
        out[i, rows[i], cols[i]] = vals[i]
    return out


def batch_distortion(image: np.ndarray, perturbed_batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row (changed-pixel count, summed |channel delta|) for a batch."""
    deltas = np.abs(
        perturbed_batch.astype(np.int16) - image.astype(np.int16)
    ).sum(axis=3, dtype=np.int32)
    m = (deltas > 0).sum(axis=(1, 2))
    total = deltas.sum(axis=(1, 2), dtype=np.int64)
    return m, total


def batch_costs(image: np.ndarray, perturbed_batch: np.ndarray) -> np.ndarray:
    """Normalized distortion cost for every image of a perturbed batch."""
    m, total = batch_distortion(image, perturbed_batch)
    out = np.zeros(perturbed_batch.shape[0], dtype=np.float64)
    nonzero = m > 0
    out[nonzero] = total[nonzero] / (3.0 * m[nonzero] * COST_NORMALIZER)
    return out


def _changed_deltas(original: np.ndarray, perturbed: np.ndarray, genome=None) -> tuple[int, float]:
    """(#pixels changed, summed |channel delta| over them).

    When the genome is given only its target pixels are examined, which the
    attack loop relies on; the result is identical to a full-image diff.
    """
    if original.shape != perturbed.shape:
        raise ValueError(f"shape mismatch: {original.shape} vs {perturbed.shape}")
    o = original.astype(np.int64)
    p = perturbed.astype(np.int64)
    if genome is not None:
        flat = genome.to_flat() if isinstance(genome, PerturbationGenome) else np.asarray(genome)
        if flat.size == 0:
            return 0, 0.0
        table = _edit_table(flat, original.shape[0], original.shape[1])
        coords = {(int(r), int(c)) for r, c in table[:, :2]}
        rows = np.array([rc[0] for rc in coords])
        cols = np.array([rc[1] for rc in coords])
        diffs = np.abs(o[rows, cols] - p[rows, cols])
    else:
        diffs = np.abs(o - p).reshape(-1, original.shape[-1])
    changed = diffs.any(axis=-1)
    m = int(changed.sum())
    return m, float(diffs[changed].sum())


def distortion_cost(original: np.ndarray, perturbed: np.ndarray, genome=None) -> float:
    """Normalized cost: mean |channel delta| over modified pixels, / 256.

    Zero when nothing changed.
    """
    m, total = _changed_deltas(original, perturbed, genome)
    if m == 0:
        return 0.0
    return total / (3.0 * m * COST_NORMALIZER)


def per_channel_distortion(original: np.ndarray, perturbed: np.ndarray, genome=None) -> float:
    """Reported distortion: mean |channel delta| over modified pixels, 0..255 scale."""
    m, total = _changed_deltas(original, perturbed, genome)
    if m == 0:
        return 0.0
    return total / (3.0 * m)


def fitness(
    probs: np.ndarray,
    true_class: int,
    cost: float,
    params: FitnessParams = DEFAULT_FITNESS_PARAMS,
) -> float:
    """Weighted sum of the true-class probability and the distortion cost."""
    probs = np.asarray(probs)
    if not 0 <= true_class < probs.shape[-1]:
        raise ValueError(f"true_class {true_class} out of range for {probs.shape[-1]} classes")
    return params.w_prob * float(probs[true_class]) + params.w_cost * float(cost)
