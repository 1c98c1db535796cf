"""Benchmark objectives with known minima, for validating the optimizer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BenchmarkObjective:
    name: str
    fn: Callable[[np.ndarray], float]
    domain: tuple[float, float]     # same (lo, hi) for every dimension
    minimum_value: float
    minimizer: Callable[[int], np.ndarray]   # dim -> argmin

    def bounds(self, dim: int) -> list[tuple[float, float]]:
        return [self.domain] * dim


def sphere(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * x))


def rastrigin(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def benchmark_objectives() -> dict[str, BenchmarkObjective]:
    """Catalog of standard test functions keyed by name."""
    return {
        "sphere": BenchmarkObjective(
            name="sphere",
            fn=sphere,
            domain=(-5.0, 5.0),
            minimum_value=0.0,
            minimizer=lambda dim: np.zeros(dim),
        ),
        "rastrigin": BenchmarkObjective(
            name="rastrigin",
            fn=rastrigin,
            domain=(-5.12, 5.12),
            minimum_value=0.0,
            minimizer=lambda dim: np.zeros(dim),
        ),
        "rosenbrock": BenchmarkObjective(
            name="rosenbrock",
            fn=rosenbrock,
            domain=(-2.048, 2.048),
            minimum_value=0.0,
            minimizer=lambda dim: np.ones(dim),
        ),
    }
