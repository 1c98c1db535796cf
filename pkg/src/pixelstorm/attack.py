"""Per-image attacks, campaigns over datasets, and the greedy variant search.

An attack evolves a pixel-edit genome against one image, querying the oracle
only for probability vectors. The run stops on the generation budget, on the
fitness threshold, or (by default) as soon as any evaluated candidate
dethrones the originally predicted class. Every probability vector an
outcome reports was cached from an evaluation the engine counted, so oracle
query accounting matches the trace exactly.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .engine import EngineError, VariantSpec, evolve
from .perturbation import (
    DEFAULT_FITNESS_PARAMS,
    FitnessParams,
    PerturbationGenome,
    apply_batch,
    apply_genome,
    attack_init,
    batch_costs,
    distortion_cost,
    fitness,
    genome_bounds,
    per_channel_distortion,
)

_MASK64 = (1 << 64) - 1


def derive_seed(root_seed: int, index: int) -> int:
    """Splitmix64 step: independent per-image seeds from one campaign seed."""
    z = (root_seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass
class AttackOutcome:
    """Everything reported for one attacked image."""

    image_id: int | str
    original_class: int
    predicted_class_after: int
    success: bool
    confidence: float
    reported_distortion: float
    normalized_cost: float
    evaluations_used: int
    generations_used: int
    genome: PerturbationGenome | None
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "original_class": int(self.original_class),
            "predicted_class_after": int(self.predicted_class_after),
            "success": bool(self.success),
            "confidence": float(self.confidence),
            "reported_distortion": float(self.reported_distortion),
            "normalized_cost": float(self.normalized_cost),
            "evaluations_used": int(self.evaluations_used),
            "generations_used": int(self.generations_used),
            "genome": self.genome.to_json_dict() if self.genome is not None else None,
            "error": self.error,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AttackOutcome":
        genome = data.get("genome")
        return cls(
            image_id=data["image_id"],
            original_class=int(data["original_class"]),
            predicted_class_after=int(data["predicted_class_after"]),
            success=bool(data["success"]),
            confidence=float(data["confidence"]),
            reported_distortion=float(data["reported_distortion"]),
            normalized_cost=float(data["normalized_cost"]),
            evaluations_used=int(data["evaluations_used"]),
            generations_used=int(data["generations_used"]),
            genome=PerturbationGenome.from_json_dict(genome) if genome else None,
            error=data.get("error"),
        )


class _AttackObjective:
    """Fitness of a genome against one image, with flip and best tracking.

    Caches the probability vector of the best candidate seen (and of the
    best label-flipping candidate) so the outcome never needs an extra
    oracle query after the run.
    """

    def __init__(self, oracle, image: np.ndarray, original_class: int, params: FitnessParams):
        self.oracle = oracle
        self.image = image
        self.original_class = original_class
        self.params = params
        self.best: tuple[float, np.ndarray, np.ndarray] | None = None
        self.best_flip: tuple[float, np.ndarray, np.ndarray] | None = None

    @property
    def flipped(self) -> bool:
        return self.best_flip is not None

    def _record(self, values: np.ndarray, fit: float, probs: np.ndarray) -> None:
        if self.best is None or fit < self.best[0]:
            self.best = (fit, values.copy(), probs.copy())
        if int(np.argmax(probs)) != self.original_class:
            if self.best_flip is None or fit < self.best_flip[0]:
                self.best_flip = (fit, values.copy(), probs.copy())

    def __call__(self, values: np.ndarray) -> float:
        adv = apply_genome(self.image, values)
        probs = self.oracle.classify(adv)
        cost = distortion_cost(self.image, adv, values)
        fit = fitness(probs, self.original_class, cost, self.params)
        self._record(values, fit, probs)
        return fit

    def batch(self, matrix: np.ndarray) -> np.ndarray:
        advs = apply_batch(self.image, matrix)
        probs = self.oracle.classify_batch(advs)
        costs = batch_costs(self.image, advs)
        fits = self.params.w_prob * probs[:, self.original_class] + self.params.w_cost * costs

        i = int(np.argmin(fits))
        if self.best is None or fits[i] < self.best[0]:
            self.best = (float(fits[i]), matrix[i].copy(), probs[i].copy())
        flips = probs.argmax(axis=1) != self.original_class
        if flips.any():
            flip_fits = np.where(flips, fits, np.inf)
            j = int(np.argmin(flip_fits))
            if self.best_flip is None or flip_fits[j] < self.best_flip[0]:
                self.best_flip = (float(flip_fits[j]), matrix[j].copy(), probs[j].copy())
        return fits


def attack_image(
    image: np.ndarray,
    oracle,
    spec: VariantSpec,
    d: int = 5,
    *,
    image_id: int | str = 0,
    params: FitnessParams = DEFAULT_FITNESS_PARAMS,
    stop_on_flip: bool = True,
) -> AttackOutcome:
    """Attack one image; the target class is the oracle's own clean prediction."""
    clean_probs = oracle.classify(image)
    original_class = int(np.argmax(clean_probs))

    if d == 0:
        return AttackOutcome(
            image_id=image_id,
            original_class=original_class,
            predicted_class_after=original_class,
            success=False,
            confidence=float(clean_probs[original_class]),
            reported_distortion=0.0,
            normalized_cost=0.0,
            evaluations_used=0,
            generations_used=0,
            genome=PerturbationGenome(edits=()),
        )

    objective = _AttackObjective(oracle, image, original_class, params)
    stop = (lambda values, fit: objective.flipped) if stop_on_flip else None
    _, trace = evolve(
        spec,
        objective,
        genome_bounds(image.shape, d),
        init=attack_init(image.shape, d),
        batch_objective=objective.batch,
        stop_condition=stop,
    )

    fit, values, probs = objective.best_flip if objective.best_flip is not None else objective.best
    genome = PerturbationGenome.from_flat(values, image.shape)
    adv = apply_genome(image, genome)
    predicted_after = int(np.argmax(probs))
    success = predicted_after != original_class
    confidence = float(probs.max()) if success else float(probs[original_class])

    return AttackOutcome(
        image_id=image_id,
        original_class=original_class,
        predicted_class_after=predicted_after,
        success=success,
        confidence=confidence,
        reported_distortion=per_channel_distortion(image, adv, genome),
        normalized_cost=distortion_cost(image, adv, genome),
        evaluations_used=trace.total_evaluations,
        generations_used=len(trace.best_fitness_per_generation) - 1,
        genome=genome,
    )


@dataclass
class CampaignReport:
    """Aggregated outcomes of attacking a sampled set of images."""

    variant: VariantSpec
    d: int
    seed: int
    class_names: list[str]
    outcomes: list[AttackOutcome]
    class_pair_matrix: np.ndarray  # (K, K) successful (original, target) counts

    @property
    def success_rate(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(o.success for o in self.outcomes) / len(self.outcomes)

    @property
    def mean_confidence_over_successes(self) -> float | None:
        vals = [o.confidence for o in self.outcomes if o.success]
        return float(np.mean(vals)) if vals else None

    @property
    def mean_distortion_over_successes(self) -> float | None:
        vals = [o.reported_distortion for o in self.outcomes if o.success]
        return float(np.mean(vals)) if vals else None

    def to_json_dict(self) -> dict:
        return {
            "variant": self.variant.name,
            "spec": {
                "scale_f": self.variant.scale_f,
                "cross_pos": self.variant.cross_pos,
                "cross_rgb": self.variant.cross_rgb,
                "pop_size": self.variant.pop_size,
                "max_generations": self.variant.max_generations,
                "early_stop_fitness": self.variant.early_stop_fitness,
                "f_dither": list(self.variant.f_dither) if self.variant.f_dither else None,
            },
            "d": self.d,
            "seed": self.seed,
            "class_names": list(self.class_names),
            "sample_count": len(self.outcomes),
            "success_rate": self.success_rate,
            "mean_confidence_over_successes": self.mean_confidence_over_successes,
            "mean_distortion_over_successes": self.mean_distortion_over_successes,
            "class_pair_matrix": self.class_pair_matrix.tolist(),
            "outcomes": [o.to_json_dict() for o in self.outcomes],
        }


def _normalize_dataset(dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(dataset, tuple) and len(dataset) == 2:
        images, labels = dataset
        return np.asarray(images), np.asarray(labels)
    images = np.stack([pair[0] for pair in dataset])
    labels = np.asarray([pair[1] for pair in dataset])
    return images, labels


def _attack_task(args) -> AttackOutcome:
    oracle, image, idx, spec, d, params, stop_on_flip = args
    try:
        return attack_image(
            image, oracle, spec, d, image_id=idx, params=params, stop_on_flip=stop_on_flip
        )
    except Exception as exc:  # recorded, never aborts the campaign
        return AttackOutcome(
            image_id=idx,
            original_class=-1,
            predicted_class_after=-1,
            success=False,
            confidence=0.0,
            reported_distortion=0.0,
            normalized_cost=0.0,
            evaluations_used=0,
            generations_used=0,
            genome=None,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_campaign(
    dataset,
    oracle,
    spec: VariantSpec,
    sample_count: int,
    seed: int,
    *,
    d: int = 5,
    params: FitnessParams = DEFAULT_FITNESS_PARAMS,
    stop_on_flip: bool = True,
    workers: int = 1,
) -> CampaignReport:
    """Attack a deterministic sample of the dataset and aggregate the metrics.

    Each sampled image gets its own seed derived from the campaign seed and
    its dataset index, so results do not depend on the worker count.
    """
    images, _labels = _normalize_dataset(dataset)
    if sample_count > images.shape[0]:
        raise ValueError(
            f"sample_count {sample_count} exceeds dataset size {images.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    indices = sorted(int(i) for i in rng.choice(images.shape[0], size=sample_count, replace=False))

    tasks = [
        (oracle, images[idx], idx, spec.with_seed(derive_seed(seed, idx)), d, params, stop_on_flip)
        for idx in indices
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_attack_task, tasks, chunksize=1))
    else:
        outcomes = [_attack_task(t) for t in tasks]

    k = oracle.num_classes
    matrix = np.zeros((k, k), dtype=np.int64)
    for outcome in outcomes:
        if outcome.success:
            matrix[outcome.original_class, outcome.predicted_class_after] += 1

    return CampaignReport(
        variant=spec,
        d=d,
        seed=seed,
        class_names=list(oracle.class_names),
        outcomes=outcomes,
        class_pair_matrix=matrix,
    )


AXIS_NAMES = ("F", "Cp", "Crgb")


@dataclass
class VariantRow:
    variant: VariantSpec
    success_rate: float | None
    mean_confidence: float | None
    mean_distortion: float | None
    recommended: bool = False
    error: str | None = None
    report: CampaignReport | None = None

    @property
    def name(self) -> str:
        return self.variant.name


@dataclass
class VariantSearchResult:
    rows: list[VariantRow] = field(default_factory=list)

    def names(self) -> list[str]:
        return [row.name for row in self.rows]

    def f_axis_note(self) -> str | None:
        """Observation comparing mean distortion across swept scale factors.

        Directional trends here are model-specific, so they are reported
        rather than asserted.
        """
        by_f: dict[float, list[float]] = {}
        for row in self.rows:
            if row.mean_distortion is not None:
                by_f.setdefault(row.variant.scale_f, []).append(row.mean_distortion)
        if len(by_f) < 2:
            return None
        means = {f: float(np.mean(v)) for f, v in by_f.items()}
        ordered = sorted(means)
        note = "mean distortion by scale factor: " + ", ".join(
            f"F={f:.1f}: {means[f]:.2f}" for f in ordered
        )
        if all(means[a] <= means[b] + 1e-9 for a, b in zip(ordered, ordered[1:])):
            if means[ordered[0]] < means[ordered[-1]]:
                note += "; smaller scale factors yielded lower distortion"
        return note


def _apply_axis(spec: VariantSpec, axis: str, value: float) -> VariantSpec:
    from dataclasses import replace

    if axis == "F":
        return replace(spec, scale_f=value)
    if axis == "Cp":
        return replace(spec, cross_pos=value)
    if axis == "Crgb":
        return replace(spec, cross_rgb=value)
    raise EngineError(f"unknown axis {axis!r}; expected one of {AXIS_NAMES}")


def greedy_variant_search(
    dataset,
    oracle,
    base: VariantSpec,
    axes: Mapping[str, Sequence[float]],
    *,
    sample_count: int,
    seed: int,
    d: int = 5,
    slack_pct: float = 2.0,
    workers: int = 1,
    keep_reports: bool = True,
    **attack_kwargs,
) -> VariantSearchResult:
    """Sweep variants from a base setting, one campaign per variant.

    A single axis varies that parameter alone; several axes sweep their
    cartesian product. Rows minimizing distortion while staying within
    ``slack_pct`` percentage points of the best success rate are flagged as
    recommended.
    """
    if not axes:
        raise EngineError("at least one axis of candidate values is required")
    for name in axes:
        if name not in AXIS_NAMES:
            raise EngineError(f"unknown axis {name!r}; expected one of {AXIS_NAMES}")

    specs: list[VariantSpec] = []
    seen: set[str] = set()
    names = list(axes.keys())
    for combo in itertools.product(*(axes[n] for n in names)):
        candidate = base
        for axis, value in zip(names, combo):
            candidate = _apply_axis(candidate, axis, float(value))
        if candidate.name not in seen:
            seen.add(candidate.name)
            specs.append(candidate)

    rows: list[VariantRow] = []
    for candidate in specs:
        try:
            report = run_campaign(
                dataset, oracle, candidate, sample_count, seed,
                d=d, workers=workers, **attack_kwargs,
            )
            rows.append(
                VariantRow(
                    variant=candidate,
                    success_rate=report.success_rate,
                    mean_confidence=report.mean_confidence_over_successes,
                    mean_distortion=report.mean_distortion_over_successes,
                    report=report if keep_reports else None,
                )
            )
        except Exception as exc:
            rows.append(
                VariantRow(
                    variant=candidate,
                    success_rate=None,
                    mean_confidence=None,
                    mean_distortion=None,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )

    ok = [r for r in rows if r.success_rate is not None]
    if ok:
        best_rate = max(r.success_rate for r in ok)
        candidates = [
            r for r in ok
            if r.success_rate >= best_rate - slack_pct / 100.0 and r.mean_distortion is not None
        ]
        if candidates:
            best_distortion = min(r.mean_distortion for r in candidates)
            for r in candidates:
                if r.mean_distortion == best_distortion:
                    r.recommended = True
    return VariantSearchResult(rows=rows)


def chained_attack(
    image: np.ndarray,
    oracle,
    spec: VariantSpec,
    d: int = 5,
    *,
    intermediate_class: int | None = None,
    image_id: int | str = 0,
    **attack_kwargs,
) -> list[AttackOutcome]:
    """Two-hop attack: land on an intermediate class, then attack again.

    The second stage runs on the first stage's perturbed image, so the chain
    accumulates at most ``2 * d`` edited pixels. A failed or off-target first
    stage short-circuits to a one-element sequence.
    """
    first = attack_image(image, oracle, spec, d, image_id=image_id, **attack_kwargs)
    if intermediate_class is not None and intermediate_class == first.original_class:
        raise ValueError("intermediate_class must differ from the original prediction")
    if not first.success:
        return [first]
    if intermediate_class is not None and first.predicted_class_after != intermediate_class:
        return [first]

    staged = apply_genome(image, first.genome)
    second = attack_image(
        staged,
        oracle,
        spec.with_seed(derive_seed(spec.rng_seed, 1)),
        d,
        image_id=f"{image_id}:stage2",
        **attack_kwargs,
    )
    return [first, second]
