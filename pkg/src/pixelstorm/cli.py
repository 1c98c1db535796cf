"""Command-line front end: attack, campaign, gridsearch, classify.

All artifacts land under --output-dir with fixed names (outcome.json,
report.json, outcomes.csv, heatmap.csv, summary.csv, adv_<id>.png). Runs
with identical flags and seed produce byte-identical JSON/CSV outputs;
wall-clock facts go to run_meta.json, which is excluded from that contract.

Exit codes: 0 success, 1 attack ran but did not flip the label,
2 operational error (bad flags, missing files, malformed inputs).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attack import (
    AttackOutcome,
    CampaignReport,
    attack_image,
    greedy_variant_search,
    run_campaign,
)
from .cifar import CifarFormatError, load_cifar10_batch
from .classifier import ModelError, ModelOracle, load_model
from .engine import EngineError, VariantSpec
from .fixture import make_fixture_dataset, make_fixture_model
from .kernels import get_backend
from .perturbation import apply_genome

SEED_ENV_VAR = "PIXELSTORM_SEED"


class CliError(Exception):
    """Operational failure; maps to exit code 2."""


def _parse_variant(text: str) -> tuple[float, float, float]:
    parts = text.split("/")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"variant must look like F/Cp/Crgb (e.g. 0.5/0.1/0.1), got {text!r}"
        )
    try:
        f, cp, crgb = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"variant parts must be numbers, got {text!r}") from None
    return f, cp, crgb


def _parse_axis(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"axis must look like NAME=v1,v2,..., got {text!r}")
    name, _, values = text.partition("=")
    name = name.strip()
    if name not in ("F", "Cp", "Crgb"):
        raise argparse.ArgumentTypeError(f"axis name must be F, Cp or Crgb, got {name!r}")
    items = [v for v in values.split(",") if v.strip()]
    if not items:
        raise argparse.ArgumentTypeError(f"axis {name} has an empty value list")
    try:
        return name, [float(v) for v in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"axis {name} values must be numbers, got {values!r}") from None


def _add_common(parser: argparse.ArgumentParser, with_samples: bool) -> None:
    src = parser.add_argument_group("model and data")
    src.add_argument("--model", help="model JSON file")
    src.add_argument("--dataset", help="CIFAR-10 binary batch file")
    src.add_argument("--fixture", action="store_true",
                     help="use the built-in quadrant model and synthetic images")
    src.add_argument("--fixture-count", type=int, default=60,
                     help="size of the synthetic fixture dataset (default 60)")

    run = parser.add_argument_group("attack parameters")
    run.add_argument("--variant", type=_parse_variant, default=(0.5, 0.5, 0.5),
                     help="DE variant as F/Cp/Crgb (default 0.5/0.5/0.5)")
    run.add_argument("--d", type=int, default=5, help="number of pixel edits (default 5)")
    run.add_argument("--pop-size", type=int, default=400)
    run.add_argument("--max-generations", type=int, default=100)
    run.add_argument("--early-stop-fitness", type=float, default=0.007)
    run.add_argument("--no-stop-on-flip", action="store_true",
                     help="keep evolving after the label first flips")
    run.add_argument("--seed", type=int, default=0,
                     help=f"run seed; the {SEED_ENV_VAR} env var overrides it")
    if with_samples:
        run.add_argument("--samples", type=int, default=60,
                         help="number of images to sample from the dataset")
        run.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                         help="parallel attack workers (default: processor count)")

    parser.add_argument("--output-dir", default="out", help="directory for artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixelstorm",
        description="Few-pixel black-box adversarial attacks via differential evolution.",
    )
    parser.add_argument("--version", action="version", version=f"pixelstorm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="attack one image")
    _add_common(p_attack, with_samples=False)
    p_attack.add_argument("--index", type=int, default=0, help="dataset index of the image")
    p_attack.add_argument("--image", help="attack a PNG file instead of a dataset index")
    p_attack.set_defaults(handler=cmd_attack)

    p_campaign = sub.add_parser("campaign", help="attack a sampled set of images")
    _add_common(p_campaign, with_samples=True)
    p_campaign.set_defaults(handler=cmd_campaign)

    p_grid = sub.add_parser("gridsearch", help="greedy variant sweep, one campaign per variant")
    _add_common(p_grid, with_samples=True)
    p_grid.add_argument("--axis", type=_parse_axis, action="append", default=None,
                        metavar="NAME=V1,V2,...",
                        help="axis to sweep (F, Cp or Crgb); repeatable")
    p_grid.add_argument("--slack", type=float, default=2.0,
                        help="success-rate slack (percentage points) when ranking variants")
    p_grid.set_defaults(handler=cmd_gridsearch)

    p_classify = sub.add_parser("classify", help="print the oracle's probability vectors")
    _add_common(p_classify, with_samples=False)
    p_classify.add_argument("--index", type=int, help="classify a single dataset index")
    p_classify.add_argument("--image", help="classify a PNG file")
    p_classify.add_argument("--output", help="write JSON here instead of stdout")
    p_classify.set_defaults(handler=cmd_classify)

    return parser


def _resolve_seed(args) -> int:
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return args.seed


def _build_spec(args, seed: int) -> VariantSpec:
    f, cp, crgb = args.variant
    try:
        return VariantSpec(
            scale_f=f,
            cross_pos=cp,
            cross_rgb=crgb,
            pop_size=args.pop_size,
            max_generations=args.max_generations,
            early_stop_fitness=args.early_stop_fitness,
            rng_seed=seed,
        )
    except EngineError as exc:
        raise CliError(str(exc)) from exc


def _load_inputs(args) -> tuple[ModelOracle, tuple[np.ndarray, np.ndarray] | None, dict]:
    """Resolve the oracle and (optionally) the dataset from the flags."""
    if args.fixture:
        if args.model or args.dataset:
            raise CliError("--fixture replaces --model/--dataset; do not combine them")
        model = make_fixture_model(seed=0)
        dataset = make_fixture_dataset(seed=0, count=args.fixture_count)
        source = {"model": "fixture", "dataset": f"fixture:{args.fixture_count}"}
    else:
        if not args.model:
            raise CliError("--model is required unless --fixture is given")
        try:
            model = load_model(args.model)
        except ModelError as exc:
            raise CliError(str(exc)) from exc
        dataset = None
        if args.dataset:
            try:
                dataset = load_cifar10_batch(args.dataset)
            except (CifarFormatError, OSError) as exc:
                raise CliError(f"cannot load dataset {args.dataset}: {exc}") from exc
        source = {"model": args.model, "dataset": args.dataset}
    return ModelOracle(model), dataset, source


def _load_png(path: str) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise CliError(f"cannot read image {path}: {exc}") from exc


def _save_png(path: Path, image: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(image, mode="RGB").save(path)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _write_run_meta(outdir: Path, started: float, extra: dict) -> None:
    meta = {
        "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "wall_seconds": round(time.perf_counter() - started, 3),
        "backend": get_backend().NAME,
    }
    meta.update(extra)
    _write_json(outdir / "run_meta.json", meta)


def _write_outcomes_csv(path: Path, report: CampaignReport) -> None:
    names = report.class_names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["image_id", "original_class", "original_name", "predicted_class_after",
             "predicted_name", "success", "confidence", "reported_distortion",
             "normalized_cost", "evaluations_used", "generations_used", "error"]
        )
        for o in report.outcomes:
            oname = names[o.original_class] if 0 <= o.original_class < len(names) else ""
            pname = names[o.predicted_class_after] if 0 <= o.predicted_class_after < len(names) else ""
            writer.writerow(
                [o.image_id, o.original_class, oname, o.predicted_class_after, pname,
                 int(o.success), repr(o.confidence), repr(o.reported_distortion),
                 repr(o.normalized_cost), o.evaluations_used, o.generations_used,
                 o.error or ""]
            )


def _write_heatmap_csv(path: Path, report: CampaignReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["original/target"] + list(report.class_names))
        for i, name in enumerate(report.class_names):
            writer.writerow([name] + [int(v) for v in report.class_pair_matrix[i]])


def _write_campaign_artifacts(outdir: Path, report: CampaignReport) -> None:
    _write_json(outdir / "report.json", report.to_json_dict())
    _write_outcomes_csv(outdir / "outcomes.csv", report)
    _write_heatmap_csv(outdir / "heatmap.csv", report)


def cmd_attack(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    spec = _build_spec(args, seed)
    oracle, dataset, source = _load_inputs(args)

    if args.image:
        image = _load_png(args.image)
        image_id = Path(args.image).stem
    else:
        if dataset is None:
            raise CliError("provide --dataset with --index, or --image, or --fixture")
        images, _ = dataset
        if not 0 <= args.index < images.shape[0]:
            raise CliError(f"--index {args.index} out of range for dataset of {images.shape[0]}")
        image = images[args.index]
        image_id = args.index

    if image.shape != tuple(oracle.model.input_shape):
        raise CliError(
            f"image shape {image.shape} does not match model input {tuple(oracle.model.input_shape)}"
        )

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    outcome = attack_image(
        image, oracle, spec, args.d,
        image_id=image_id, stop_on_flip=not args.no_stop_on_flip,
    )

    names = oracle.class_names
    payload = outcome.to_json_dict()
    payload.update(
        {
            "variant": spec.name,
            "seed": seed,
            "d": args.d,
            "class_names": names,
            "source": source,
        }
    )
    _write_json(outdir / "outcome.json", payload)

    adv = apply_genome(image, outcome.genome) if outcome.genome is not None else image.copy()
    _save_png(outdir / f"adv_{image_id}.png", adv)
    _write_json(
        outdir / f"adv_{image_id}.json",
        {
            "genome": outcome.genome.to_json_dict() if outcome.genome is not None else None,
            "original_class": outcome.original_class,
            "original_name": names[outcome.original_class],
            "predicted_class_after": outcome.predicted_class_after,
            "predicted_name": names[outcome.predicted_class_after],
            "confidence": outcome.confidence,
        },
    )
    _write_run_meta(outdir, started, {"command": "attack"})

    print(
        f"attack {'succeeded' if outcome.success else 'failed'}: "
        f"{names[outcome.original_class]} -> {names[outcome.predicted_class_after]} "
        f"confidence={outcome.confidence:.4f} distortion={outcome.reported_distortion:.2f} "
        f"evaluations={outcome.evaluations_used}"
    )
    return 0 if outcome.success else 1


def _campaign_for(args, seed: int) -> CampaignReport:
    spec = _build_spec(args, seed)
    oracle, dataset, _ = _load_inputs(args)
    if dataset is None:
        raise CliError("campaigns need --dataset or --fixture")
    images, _labels = dataset
    if args.samples > images.shape[0]:
        raise CliError(f"--samples {args.samples} exceeds dataset size {images.shape[0]}")
    return run_campaign(
        dataset, oracle, spec, args.samples, seed,
        d=args.d, stop_on_flip=not args.no_stop_on_flip, workers=args.workers,
    )


def cmd_campaign(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    report = _campaign_for(args, seed)
    _write_campaign_artifacts(outdir, report)
    _write_run_meta(outdir, started, {"command": "campaign", "workers": args.workers})

    rate = report.success_rate * 100
    print(f"campaign done: {len(report.outcomes)} images, success rate {rate:.2f}%")
    return 0


def _format_pct(value: float | None) -> str:
    return f"{value * 100:.2f}%" if value is not None else ""


def cmd_gridsearch(args) -> int:
    started = time.perf_counter()
    seed = _resolve_seed(args)
    if not args.axis:
        raise CliError("at least one --axis NAME=V1,V2,... is required")
    axes: dict[str, list[float]] = {}
    for name, values in args.axis:
        axes.setdefault(name, []).extend(values)

    base = _build_spec(args, seed)
    oracle, dataset, _ = _load_inputs(args)
    if dataset is None:
        raise CliError("gridsearch needs --dataset or --fixture")
    images, _labels = dataset
    if args.samples > images.shape[0]:
        raise CliError(f"--samples {args.samples} exceeds dataset size {images.shape[0]}")

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    result = greedy_variant_search(
        dataset, oracle, base, axes,
        sample_count=args.samples, seed=seed, d=args.d,
        slack_pct=args.slack, workers=args.workers,
        stop_on_flip=not args.no_stop_on_flip,
    )

    with open(outdir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["Variant", "Success Rate", "Confidence", "Cost"])
        for row in result.rows:
            writer.writerow(
                [
                    row.name,
                    _format_pct(row.success_rate),
                    _format_pct(row.mean_confidence),
                    f"{row.mean_distortion:.2f}" if row.mean_distortion is not None else "",
                ]
            )

    observations = [note for note in [result.f_axis_note()] if note]
    _write_json(
        outdir / "summary.json",
        {
            "base_variant": base.name,
            "axes": {k: list(v) for k, v in axes.items()},
            "slack_pct": args.slack,
            "observations": observations,
            "rows": [
                {
                    "variant": row.name,
                    "success_rate": row.success_rate,
                    "mean_confidence": row.mean_confidence,
                    "mean_distortion": row.mean_distortion,
                    "recommended": row.recommended,
                    "error": row.error,
                }
                for row in result.rows
            ],
        },
    )

    for row in result.rows:
        if row.report is None:
            continue
        vdir = outdir / ("variant_" + row.name.replace("/", "_"))
        vdir.mkdir(parents=True, exist_ok=True)
        _write_campaign_artifacts(vdir, row.report)

    _write_run_meta(outdir, started, {"command": "gridsearch", "workers": args.workers})
    recommended = [row.name for row in result.rows if row.recommended]
    print(f"gridsearch done: {len(result.rows)} variants; recommended: {', '.join(recommended) or 'n/a'}")
    for note in observations:
        print(f"observation: {note}")
    return 0


def cmd_classify(args) -> int:
    oracle, dataset, _ = _load_inputs(args)
    if args.image:
        images = _load_png(args.image)[None, ...]
        ids: list = [Path(args.image).stem]
    else:
        if dataset is None:
            raise CliError("provide --dataset, --image, or --fixture")
        images, _labels = dataset
        if args.index is not None:
            if not 0 <= args.index < images.shape[0]:
                raise CliError(f"--index {args.index} out of range for dataset of {images.shape[0]}")
            images = images[args.index : args.index + 1]
            ids = [args.index]
        else:
            ids = list(range(images.shape[0]))

    if images.shape[1:] != tuple(oracle.model.input_shape):
        raise CliError(
            f"image shape {images.shape[1:]} does not match model input {tuple(oracle.model.input_shape)}"
        )

    probs = oracle.classify_batch(images)
    payload = {
        "classes": oracle.class_names,
        "results": [
            {
                "id": ids[i],
                "predicted": int(np.argmax(probs[i])),
                "probs": [float(p) for p in probs[i]],
            }
            for i in range(probs.shape[0])
        ],
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EngineError, ModelError, CifarFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
