"""Cross-runtime parity: torch forward pass vs the attack binary's classify.

The probe images travel to the attack side as a CIFAR-format batch file and
come back as probability vectors through ``pixelstorm classify`` - the same
two interfaces an attack campaign uses, so passing here means the export is
faithful end to end.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import write_cifar_batch
from .net import SmallConvNet, predict_probs

PRIMARY_BINARY = "pixelstorm"


class ParityError(RuntimeError):
    pass


@dataclass
class ParityReport:
    probe_count: int
    max_divergence: float
    worst_probe: int
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_divergence < self.threshold


def _run_classify(args: list[str]) -> None:
    proc = subprocess.run([PRIMARY_BINARY, "classify", *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise ParityError(
            f"{PRIMARY_BINARY} classify failed (exit {proc.returncode}): {proc.stderr.strip()}"
        )


def classify_via_primary(model_path: str | Path, images: np.ndarray) -> np.ndarray:
    """Run images through the attack binary's oracle, via files and the CLI.

    32x32x3 probes travel as one CIFAR-format batch; anything else goes as
    individual PNGs.
    """
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "probs.json"
        if images.shape[1:] == (32, 32, 3):
            probes = Path(tmp) / "probes.bin"
            write_cifar_batch(probes, images, np.zeros(images.shape[0], dtype=np.int64))
            _run_classify(["--model", str(model_path), "--dataset", str(probes),
                           "--output", str(out)])
            doc = json.loads(out.read_text())
            return np.array([entry["probs"] for entry in doc["results"]], dtype=np.float64)

        from PIL import Image

        rows = []
        for i in range(images.shape[0]):
            png = Path(tmp) / f"probe_{i}.png"
            Image.fromarray(images[i], mode="RGB").save(png)
            _run_classify(["--model", str(model_path), "--image", str(png),
                           "--output", str(out)])
            doc = json.loads(out.read_text())
            rows.append(doc["results"][0]["probs"])
        return np.array(rows, dtype=np.float64)


def verify_parity(
    model: SmallConvNet,
    model_path: str | Path,
    probe_images: np.ndarray,
    threshold: float = 1e-4,
) -> ParityReport:
    """Compare torch probabilities against the exported model's, probe by probe."""
    if probe_images.shape[0] == 0:
        raise ParityError("empty probe set")
    torch_probs = predict_probs(model, probe_images)
    primary_probs = classify_via_primary(model_path, probe_images)
    if torch_probs.shape != primary_probs.shape:
        raise ParityError(
            f"probability shapes differ: torch {torch_probs.shape} vs primary {primary_probs.shape}"
        )
    divergence = np.abs(torch_probs - primary_probs).max(axis=1)
    worst = int(np.argmax(divergence))
    report = ParityReport(
        probe_count=probe_images.shape[0],
        max_divergence=float(divergence[worst]),
        worst_probe=worst,
        threshold=threshold,
    )
    if not report.passed:
        raise ParityError(
            f"probe {worst} diverges by {report.max_divergence:.3e} (threshold {threshold:g})"
        )
    return report
