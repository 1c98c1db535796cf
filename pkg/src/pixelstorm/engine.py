"""Differential evolution over fixed-length bounded real vectors.

Genomes are flat float vectors laid out as consecutive 5-field records
``[x, y, r, g, b]``. Mutation is the classic three-partner difference step
``x_r1 + F * (x_r2 - x_r3)``; crossover works on whole field groups (one
Bernoulli trial for the two leading position fields of every record, an
independent one for the three trailing value fields); selection is strictly
one-to-one between each individual and its own offspring.

Reproducibility contract: a single seeded generator drives the whole run.
Per index the draw order is fixed: three partner indices, then the optional
dithered scale factor, then the two crossover trials. The two crossover
uniforms are always drawn, even when a probability is 0 or 1, so that runs
with different probabilities consume the stream identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

RECORD_SIZE = 5
POSITION_FIELDS = 2

InitFn = Callable[[np.random.Generator, int], np.ndarray]
ObjectiveFn = Callable[[np.ndarray], float]
BatchObjectiveFn = Callable[[np.ndarray], np.ndarray]
StopConditionFn = Callable[[np.ndarray, float], bool]


class EngineError(ValueError):
    """Invalid engine configuration or genome layout."""


class EvaluationError(RuntimeError):
    """Objective evaluation failed; carries the generation and index."""

    def __init__(self, generation: int, index: int | None, cause: BaseException):
        where = f"generation {generation}"
        if index is not None:
            where += f", index {index}"
        super().__init__(f"objective evaluation failed at {where}: {cause!r}")
        self.generation = generation
        self.index = index


@dataclass(frozen=True)
class VariantSpec:
    """One DE configuration, displayed as ``F/C_p/C_rgb`` (e.g. ``0.5/0.1/0.1``).

    ``f_dither`` replaces the constant scale factor with a fresh uniform draw
    from the given range for every mutation.
    """

    scale_f: float = 0.5
    cross_pos: float = 0.5
    cross_rgb: float = 0.5
    pop_size: int = 400
    max_generations: int = 100
    early_stop_fitness: float = 0.007
    rng_seed: int = 0
    f_dither: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.pop_size < 4:
            raise EngineError(
                f"population too small: pop_size={self.pop_size}, need at least 4 "
                "(three mutation partners distinct from the current index)"
            )
        if not 0.0 < self.scale_f <= 1.0:
            raise EngineError(f"scale_f must be in (0, 1], got {self.scale_f}")
        for label, p in (("cross_pos", self.cross_pos), ("cross_rgb", self.cross_rgb)):
            if not 0.0 <= p <= 1.0:
                raise EngineError(f"{label} must be in [0, 1], got {p}")
        if self.max_generations < 1:
            raise EngineError(f"max_generations must be positive, got {self.max_generations}")
        if self.f_dither is not None:
            lo, hi = self.f_dither
            if not (0.0 < lo <= hi <= 1.0):
                raise EngineError(f"f_dither range must satisfy 0 < lo <= hi <= 1, got {self.f_dither}")

    @property
    def name(self) -> str:
        return f"{self.scale_f:.1f}/{self.cross_pos:.1f}/{self.cross_rgb:.1f}"

    @classmethod
    def from_name(cls, text: str, **overrides) -> "VariantSpec":
        """Parse an ``F/Cp/Crgb`` string such as ``0.5/0.1/0.1``."""
        parts = text.split("/")
        if len(parts) != 3:
            raise EngineError(f"variant must look like F/Cp/Crgb, got {text!r}")
        try:
            f, cp, crgb = (float(p) for p in parts)
        except ValueError as exc:
            raise EngineError(f"variant must contain three numbers, got {text!r}") from exc
        return cls(scale_f=f, cross_pos=cp, cross_rgb=crgb, **overrides)

    def with_seed(self, rng_seed: int) -> "VariantSpec":
        return replace(self, rng_seed=rng_seed)


@dataclass
class Population:
    """Parallel arrays of genomes and their objective values, plus the bounds."""

    values: np.ndarray      # (pop_size, dim)
    fitnesses: np.ndarray   # (pop_size,)
    lower: np.ndarray       # (dim,)
    upper: np.ndarray       # (dim,)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def best_fitness(self) -> float:
        finite = self.fitnesses[np.isfinite(self.fitnesses)]
        if finite.size == 0:
            return math.nan
        return float(finite.min())

    def best_index(self) -> int:
        masked = np.where(np.isfinite(self.fitnesses), self.fitnesses, np.inf)
        return int(np.argmin(masked))


@dataclass
class EvolutionTrace:
    """Per-generation best fitness and evaluation accounting for one run.

    ``total_evaluations`` includes the initial population; the post-init
    count (the convention that excludes it) is exposed separately.
    """

    best_fitness_per_generation: list[float] = field(default_factory=list)
    total_evaluations: int = 0
    stopped_early: bool = False

    @property
    def evaluations_post_init(self) -> int:
        return max(0, self.total_evaluations - self._pop_size)

    def to_json_dict(self, variant: str, seed: int) -> dict:
        return {
            "best_fitness": [float(v) for v in self.best_fitness_per_generation],
            "evaluations": int(self.total_evaluations),
            "stopped_early": bool(self.stopped_early),
            "variant": variant,
            "seed": int(seed),
        }

    # populated by evolve(); kept off the public field list deliberately
    _pop_size: int = 0


def normalize_bounds(bounds: Sequence[tuple[float, float]] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Turn a sequence of (lo, hi) pairs into two float arrays, validating order."""
    arr = np.asarray(bounds, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise EngineError(f"bounds must be a sequence of (lo, hi) pairs, got shape {arr.shape}")
    lower, upper = arr[:, 0].copy(), arr[:, 1].copy()
    if np.any(lower > upper):
        raise EngineError("every lower bound must be <= its upper bound")
    return lower, upper


def uniform_init(lower: np.ndarray, upper: np.ndarray) -> InitFn:
    """Default initializer: independent uniforms over each element's bounds."""

    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(lower, upper, size=(count, lower.size))

    return sample


def _field_masks(dim: int) -> tuple[np.ndarray, np.ndarray]:
    if dim % RECORD_SIZE != 0:
        raise EngineError(f"genome length must be a multiple of {RECORD_SIZE}, got {dim}")
    offsets = np.arange(dim) % RECORD_SIZE
    pos = offsets < POSITION_FIELDS
    return pos, ~pos


def _draw_partners(rng: np.random.Generator, pop_size: int, index: int) -> tuple[int, int, int]:
    """Three distinct indices, all different from ``index``, in three draws.

    Each draw picks uniformly from the remaining candidates by sampling a
    smaller range and shifting past the already-excluded values.
    """
    r1 = int(rng.integers(pop_size - 1))
    if r1 >= index:
        r1 += 1

    r2 = int(rng.integers(pop_size - 2))
    for used in sorted((index, r1)):
        if r2 >= used:
            r2 += 1

    r3 = int(rng.integers(pop_size - 3))
    for used in sorted((index, r1, r2)):
        if r3 >= used:
            r3 += 1

    return r1, r2, r3


def mutate(pop: Population, index: int, spec: VariantSpec, rng: np.random.Generator) -> np.ndarray:
    """Difference mutation from three distinct partners, clamped to bounds."""
    if pop.size < 4:
        raise EngineError("population too small for mutation (need 4 individuals)")
    if not 0 <= index < pop.size:
        raise EngineError(f"index {index} out of range for population of {pop.size}")
    r1, r2, r3 = _draw_partners(rng, pop.size, index)
    if spec.f_dither is not None:
        f = float(rng.uniform(spec.f_dither[0], spec.f_dither[1]))
    else:
        f = spec.scale_f
    mutant = pop.values[r1] + f * (pop.values[r2] - pop.values[r3])
    np.clip(mutant, pop.lower, pop.upper, out=mutant)
    return mutant


def crossover(parent: np.ndarray, mutant: np.ndarray, spec: VariantSpec, rng: np.random.Generator) -> np.ndarray:
    """Field-group recombination of a parent with its mutant.

    One trial with probability ``cross_pos`` copies the parent's position
    fields (the first two of every record) into the child; an independent
    trial with probability ``cross_rgb`` does the same for the value fields.
    Both probabilities at 0 leaves the mutant untouched; both at 1 rebuilds
    the parent.
    """
    parent = np.asarray(parent, dtype=np.float64)
    mutant = np.asarray(mutant, dtype=np.float64)
    if parent.shape != mutant.shape:
        raise EngineError(f"layout mismatch: parent {parent.shape} vs mutant {mutant.shape}")
    pos_mask, rgb_mask = _field_masks(parent.size)
    child = mutant.copy()
    take_pos = rng.random() < spec.cross_pos
    take_rgb = rng.random() < spec.cross_rgb
    if take_pos:
        child[pos_mask] = parent[pos_mask]
    if take_rgb:
        child[rgb_mask] = parent[rgb_mask]
    return child


def offspring_wins(parent_fitness: float, child_fitness: float) -> bool:
    """One-to-one selection; lower fitness is better and ties go to the child.

    A NaN fitness disqualifies whichever side carries it.
    """
    if math.isnan(child_fitness):
        return False
    if math.isnan(parent_fitness):
        return True
    return child_fitness <= parent_fitness


def _evaluate(
    matrix: np.ndarray,
    objective: ObjectiveFn | None,
    batch_objective: BatchObjectiveFn | None,
    generation: int,
) -> np.ndarray:
    if batch_objective is not None:
        try:
            out = np.asarray(batch_objective(matrix), dtype=np.float64)
        except Exception as exc:
            raise EvaluationError(generation, None, exc) from exc
        if out.shape != (matrix.shape[0],):
            raise EngineError(
                f"batch objective returned shape {out.shape}, expected ({matrix.shape[0]},)"
            )
        return out
    assert objective is not None
    fits = np.empty(matrix.shape[0], dtype=np.float64)
    for i in range(matrix.shape[0]):
        try:
            fits[i] = float(objective(matrix[i]))
        except Exception as exc:
            raise EvaluationError(generation, i, exc) from exc
    return fits


def initialize_population(
    spec: VariantSpec,
    bounds: Sequence[tuple[float, float]] | np.ndarray,
    objective: ObjectiveFn | None = None,
    init: InitFn | None = None,
    rng: np.random.Generator | None = None,
    batch_objective: BatchObjectiveFn | None = None,
) -> Population:
    """Sample, clamp and evaluate the starting population."""
    if objective is None and batch_objective is None:
        raise EngineError("an objective (scalar or batch) is required")
    lower, upper = normalize_bounds(bounds)
    _field_masks(lower.size)
    if rng is None:
        rng = np.random.default_rng(spec.rng_seed)
    sampler = init if init is not None else uniform_init(lower, upper)
    values = np.asarray(sampler(rng, spec.pop_size), dtype=np.float64)
    if values.shape != (spec.pop_size, lower.size):
        raise EngineError(
            f"initializer returned shape {values.shape}, expected ({spec.pop_size}, {lower.size})"
        )
    np.clip(values, lower, upper, out=values)
    fitnesses = _evaluate(values, objective, batch_objective, generation=0)
    return Population(values=values, fitnesses=fitnesses, lower=lower, upper=upper)


def evolve(
    spec: VariantSpec,
    objective: ObjectiveFn | None,
    bounds: Sequence[tuple[float, float]] | np.ndarray,
    *,
    init: InitFn | None = None,
    batch_objective: BatchObjectiveFn | None = None,
    stop_condition: StopConditionFn | None = None,
) -> tuple[Population, EvolutionTrace]:
    """Run the full mutate/crossover/select loop.

    Stops at ``max_generations``, as soon as any population member's fitness
    drops below ``early_stop_fitness`` (checked at generation boundaries,
    including right after initialization), or when ``stop_condition`` returns
    True for an evaluated child. With a scalar objective the stop condition
    is checked after every single evaluation and may end a generation part
    way through; with a batch objective whole generations are evaluated
    atomically and the stop takes effect at the generation boundary.
    """
    rng = np.random.default_rng(spec.rng_seed)
    pop = initialize_population(
        spec, bounds, objective=objective, init=init, rng=rng, batch_objective=batch_objective
    )
    trace = EvolutionTrace(_pop_size=spec.pop_size)
    trace.total_evaluations = spec.pop_size
    trace.best_fitness_per_generation.append(pop.best_fitness())

    def threshold_met() -> bool:
        best = pop.best_fitness()
        return not math.isnan(best) and best < spec.early_stop_fitness

    def condition_hit(values: np.ndarray, fitness: float) -> bool:
        return stop_condition is not None and stop_condition(values, fitness)

    if threshold_met() or any(
        condition_hit(pop.values[i], float(pop.fitnesses[i])) for i in range(pop.size)
    ):
        trace.stopped_early = True
        return pop, trace

    for _generation in range(1, spec.max_generations + 1):
        children = np.empty_like(pop.values)
        for i in range(pop.size):
            mutant = mutate(pop, i, spec, rng)
            children[i] = crossover(pop.values[i], mutant, spec, rng)

        if batch_objective is not None:
            fits = _evaluate(children, None, batch_objective, _generation)
            trace.total_evaluations += pop.size
            for i in range(pop.size):
                if offspring_wins(float(pop.fitnesses[i]), float(fits[i])):
                    pop.values[i] = children[i]
                    pop.fitnesses[i] = fits[i]
            hit = any(condition_hit(children[i], float(fits[i])) for i in range(pop.size))
        else:
            hit = False
            for i in range(pop.size):
                try:
                    child_fit = float(objective(children[i]))
                except Exception as exc:
                    raise EvaluationError(_generation, i, exc) from exc
                trace.total_evaluations += 1
                if offspring_wins(float(pop.fitnesses[i]), child_fit):
                    pop.values[i] = children[i]
                    pop.fitnesses[i] = child_fit
                if condition_hit(children[i], child_fit):
                    hit = True
                    break

        trace.best_fitness_per_generation.append(pop.best_fitness())
        if hit or threshold_met():
            trace.stopped_early = True
            break

    return pop, trace
