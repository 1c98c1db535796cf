"""Secondary acceptance: the trained victim is attackable through the
primary's external interfaces, and the exported weights agree across
runtimes.

The trained-victim criterion is defined on a real CIFAR-10 subset; that run
is gated on PIXELSTORM_CIFAR10_DIR (a directory holding the binary batches)
because this environment cannot download the dataset. The same pipeline is
exercised for real on a generated CIFAR-format dataset instead, end to end
through `pixelstorm campaign`.
"""

import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

from pixelstorm_trainer.data import synthetic_textures, write_cifar_batch
from pixelstorm_trainer.parity import verify_parity
from pixelstorm_trainer.train import TrainSpec, train_and_export

CIFAR_ENV = "PIXELSTORM_CIFAR10_DIR"


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def run_campaign_cli(model_path, dataset_path, outdir, samples, variant="0.1/0.1/0.1"):
    proc = subprocess.run(
        ["pixelstorm", "campaign", "--model", str(model_path),
         "--dataset", str(dataset_path), "--variant", variant,
         "--samples", str(samples), "--seed", "11", "--workers", "2",
         "--no-stop-on-flip", "--output-dir", str(outdir)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return json.loads((Path(outdir) / "report.json").read_text())


@pytest.fixture(scope="module")
def stand_in_victim(tmp_path_factory):
    """5000-image training run on the CIFAR-format stand-in dataset."""
    root = tmp_path_factory.mktemp("standin")
    spec = TrainSpec(output_path=root / "victim.json", synthetic="textures",
                     synthetic_count=5883, limit=5000, epochs=5, seed=1)
    result = train_and_export(spec)
    test_images, test_labels = synthetic_textures(seed=777, count=400)
    test_path = root / "test.bin"
    write_cifar_batch(test_path, test_images, test_labels)
    return result, test_path, root


def test_parity_gate(stand_in_victim):
    """32 probes agree across runtimes under 1e-4; corruption is caught."""
    result, test_path, root = stand_in_victim
    probes, _ = synthetic_textures(seed=888, count=32)
    report = verify_parity(result.model, result.output_path, probes)

    # a head weight blown far off reorders predictions even when the net's
    # outputs are saturated, so detection cannot depend on the training run
    doc = json.loads(result.output_path.read_text())
    doc["layers"][7]["weights"][10] += 25.0
    corrupted = root / "corrupted.json"
    corrupted.write_text(json.dumps(doc))
    from pixelstorm_trainer.parity import ParityError

    caught = False
    try:
        verify_parity(result.model, corrupted, probes)
    except ParityError:
        caught = True

    ok = report.passed and caught
    verdict("parity-gate", ok,
            f"max divergence {report.max_divergence:.2e} over {report.probe_count} probes "
            f"(threshold 1e-4); corrupted-weight control caught: {caught}")
    assert report.max_divergence < 1e-4
    assert caught


@pytest.mark.slow
def test_trained_victim_attack_stand_in(stand_in_victim):
    """100-image campaign against the trained stand-in victim, full budget."""
    result, test_path, root = stand_in_victim
    acc = result.validation_accuracy
    report = run_campaign_cli(result.output_path, test_path, root / "campaign", samples=100)
    rate = report["success_rate"]
    distortion = report["mean_distortion_over_successes"]
    ok = rate >= 0.30 and distortion is not None and distortion <= 64.0
    verdict("trained-victim-attack (stand-in data)", ok,
            f"victim accuracy {acc:.3f}; success {rate * 100:.1f}% (need >= 30%), "
            f"mean distortion {distortion:.1f}/channel (need <= 64)")
    assert ok


@pytest.mark.slow
def test_trained_victim_attack_cifar10():
    """The criterion as stated, on real CIFAR-10; runs when the data exists."""
    data_dir = os.environ.get(CIFAR_ENV)
    if not data_dir:
        pytest.skip(
            f"real CIFAR-10 not available in this environment (no network); "
            f"set {CIFAR_ENV} to a directory with data_batch_1.bin and test_batch.bin "
            f"to run the criterion on the real dataset"
        )
    train_path = Path(data_dir) / "data_batch_1.bin"
    test_path = Path(data_dir) / "test_batch.bin"
    assert train_path.exists() and test_path.exists(), f"incomplete CIFAR-10 in {data_dir}"

    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        spec = TrainSpec(output_path=Path(tmp) / "victim.json",
                         dataset_paths=[str(train_path)], limit=5000, epochs=5, seed=1)
        result = train_and_export(spec)
        assert 0.4 <= result.validation_accuracy <= 0.8
        report = run_campaign_cli(result.output_path, test_path, Path(tmp) / "campaign",
                                  samples=100)
        rate = report["success_rate"]
        distortion = report["mean_distortion_over_successes"]
        ok = rate >= 0.30 and distortion is not None and distortion <= 64.0
        verdict("trained-victim-attack (CIFAR-10)", ok,
                f"success {rate * 100:.1f}%, mean distortion {distortion:.1f}/channel")
        assert ok
