"""Trainer command line: train/export victims, verify cross-runtime parity,
and materialize synthetic datasets as CIFAR-format batch files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


from .data import synthetic_textures, write_cifar_batch
from .parity import ParityError, verify_parity
from .train import TrainingError, TrainSpec, train_and_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixelstorm-trainer",
        description="Train small convnet victims and export pixelstorm model JSON.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train and export a model")
    p_train.add_argument("--dataset", action="append", default=[],
                         help="CIFAR-10 binary batch file; repeatable")
    p_train.add_argument("--synthetic", choices=["quadrant", "textures"],
                         help="train on a generated dataset instead")
    p_train.add_argument("--synthetic-count", type=int, default=6000)
    p_train.add_argument("--limit", type=int, help="cap the number of training images")
    p_train.add_argument("--epochs", type=int, default=5)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--learning-rate", type=float, default=1e-3)
    p_train.add_argument("--min-accuracy", type=float, default=0.45,
                         help="validation floor; below it nothing is exported")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--output", required=True, help="model JSON path")
    p_train.add_argument("--verify-probes", type=int, default=0,
                         help="also run a parity check on this many validation images")
    p_train.set_defaults(handler=cmd_train)

    p_gen = sub.add_parser("gen-data", help="write a synthetic textures dataset as a CIFAR batch")
    p_gen.add_argument("--count", type=int, default=6000)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--output", required=True)
    p_gen.set_defaults(handler=cmd_gen_data)

    return parser


def cmd_train(args) -> int:
    spec = TrainSpec(
        output_path=args.output,
        dataset_paths=list(args.dataset),
        synthetic=args.synthetic,
        synthetic_count=args.synthetic_count,
        limit=args.limit,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        min_accuracy=args.min_accuracy,
        seed=args.seed,
    )
    result = train_and_export(spec)
    print(
        f"exported {result.output_path} "
        f"(validation accuracy {result.validation_accuracy:.3f}, "
        f"{result.train_count} training images)"
    )
    if args.verify_probes > 0:
        from .train import _load

        images, _, _ = _load(spec)
        probes = images[: args.verify_probes]
        report = verify_parity(result.model, result.output_path, probes)
        print(
            f"parity ok: {report.probe_count} probes, "
            f"max divergence {report.max_divergence:.2e}"
        )
    return 0


def cmd_gen_data(args) -> int:
    images, labels = synthetic_textures(args.seed, args.count)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    write_cifar_batch(args.output, images, labels)
    print(f"wrote {args.count} records to {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (TrainingError, ParityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
