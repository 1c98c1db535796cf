"""Benchmark the compiled kernel core against the numpy fallback.

Times the forward pass on the built-in fixture model and on a CIFAR-scale
convnet with random weights, single-image and population-batch, then a short
end-to-end attack under each backend.

    python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pixelstorm.attack import attack_image
from pixelstorm.classifier import (
    AvgPool,
    Conv2D,
    Dense,
    Flatten,
    LayeredModel,
    ModelOracle,
    ReLU,
    Softmax,
    classify_batch,
)
from pixelstorm.engine import VariantSpec
from pixelstorm.fixture import make_fixture_dataset, make_fixture_model
from pixelstorm.kernels import available_backends


def cifar_scale_model(seed: int = 0) -> LayeredModel:
    """conv3x3x16 / pool / conv3x3x32 / pool / dense head over 32x32x3."""
    rng = np.random.default_rng(seed)
    model = LayeredModel(
        input_shape=(32, 32, 3),
        class_names=[f"c{i}" for i in range(10)],
        layers=[
            Conv2D(kernel=3, stride=1, depth=16, padding="same",
                   weights=rng.normal(0, 0.1, size=(3, 3, 3, 16)), bias=np.zeros(16)),
            ReLU(),
            AvgPool(kernel=2, stride=2),
            Conv2D(kernel=3, stride=1, depth=32, padding="same",
                   weights=rng.normal(0, 0.1, size=(3, 3, 16, 32)), bias=np.zeros(32)),
            ReLU(),
            AvgPool(kernel=2, stride=2),
            Flatten(),
            Dense(size=10, weights=rng.normal(0, 0.1, size=(2048, 10)), bias=np.zeros(10)),
            Softmax(),
        ],
    )
    model.validate()
    return model


def time_call(fn, repeats: int) -> float:
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_forward(repeats: int) -> list[tuple[str, dict[str, float]]]:
    rng = np.random.default_rng(0)
    cases = []
    fixture = make_fixture_model(seed=0)
    cases.append(("fixture 8x8, batch 1",
                  fixture, rng.integers(0, 256, size=(1, 8, 8, 3), dtype=np.uint8)))
    cases.append(("fixture 8x8, batch 400",
                  fixture, rng.integers(0, 256, size=(400, 8, 8, 3), dtype=np.uint8)))
    cifar = cifar_scale_model()
    cases.append(("cifar-scale 32x32, batch 1",
                  cifar, rng.integers(0, 256, size=(1, 32, 32, 3), dtype=np.uint8)))
    cases.append(("cifar-scale 32x32, batch 400",
                  cifar, rng.integers(0, 256, size=(400, 32, 32, 3), dtype=np.uint8)))

    rows = []
    for label, model, batch in cases:
        timings = {}
        for name, backend in sorted(available_backends().items()):
            timings[name] = time_call(lambda: classify_batch(model, batch, backend=backend),
                                      repeats)
        rows.append((label, timings))
    return rows


def bench_attack() -> dict[str, float]:
    images, _ = make_fixture_dataset(seed=0, count=1)
    spec = VariantSpec(scale_f=0.5, cross_pos=0.1, cross_rgb=0.1, pop_size=400,
                       max_generations=20, early_stop_fitness=0.0, rng_seed=3)
    timings = {}
    for name in sorted(available_backends()):
        oracle = ModelOracle(make_fixture_model(seed=0), backend_name=name)
        start = time.perf_counter()
        attack_image(images[0], oracle, spec, 5, stop_on_flip=False)
        timings[name] = time.perf_counter() - start
    return timings


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    backends = sorted(available_backends())
    print(f"backends available: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled core not built; fallback timings only\n")

    print(f"\nforward pass, mean of {args.repeats} calls:")
    header = f"{'case':34}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, timings in bench_forward(args.repeats):
        row = f"{label:34}" + "".join(f"{timings[n] * 1e3:>10.2f}ms" for n in backends)
        if len(backends) == 2:
            row += f"{timings['numpy'] / timings['cython']:>9.2f}x"
        print(row)

    print("\nfull 20-generation attack on one fixture image:")
    for name, seconds in bench_attack().items():
        print(f"  {name:8} {seconds * 1e3:8.1f}ms")


if __name__ == "__main__":
    main()
