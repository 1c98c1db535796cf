import json

import numpy as np
import pytest

from pixelstorm_trainer.data import synthetic_quadrant, synthetic_textures
from pixelstorm_trainer.parity import ParityError, verify_parity
from pixelstorm_trainer.train import TrainSpec, train_and_export


@pytest.fixture(scope="module")
def textures_result(tmp_path_factory):
    # parity only needs an exported model, not an accurate one, so the
    # training run is kept tiny and the accuracy gate is disabled
    out = tmp_path_factory.mktemp("textures") / "model.json"
    spec = TrainSpec(output_path=out, synthetic="textures", synthetic_count=1200,
                     epochs=2, min_accuracy=0.0, seed=2)
    return train_and_export(spec)


def test_parity_on_cifar_shaped_probes(textures_result):
    probes, _ = synthetic_textures(seed=555, count=8)
    report = verify_parity(textures_result.model, textures_result.output_path, probes)
    assert report.passed
    assert report.max_divergence < 1e-4


def test_parity_on_quadrant_probes_via_png(tmp_path):
    spec = TrainSpec(output_path=tmp_path / "quad.json", synthetic="quadrant",
                     synthetic_count=1200, epochs=2, min_accuracy=0.9, seed=3)
    result = train_and_export(spec)
    probes, _ = synthetic_quadrant(seed=777, count=4)
    report = verify_parity(result.model, result.output_path, probes)
    assert report.passed


def test_corrupted_weight_is_detected(textures_result, tmp_path):
    doc = json.loads(textures_result.output_path.read_text())
    doc["layers"][7]["weights"][0] += 25.0  # reorders predictions for sure
    corrupted = tmp_path / "corrupted.json"
    corrupted.write_text(json.dumps(doc))
    probes, _ = synthetic_textures(seed=556, count=8)
    with pytest.raises(ParityError, match="diverges"):
        verify_parity(textures_result.model, corrupted, probes)


def test_empty_probe_set_rejected(textures_result):
    probes = np.zeros((0, 32, 32, 3), dtype=np.uint8)
    with pytest.raises(ParityError, match="empty probe set"):
        verify_parity(textures_result.model, textures_result.output_path, probes)


def test_missing_model_file_is_a_parity_error(textures_result):
    probes, _ = synthetic_textures(seed=557, count=2)
    with pytest.raises(ParityError, match="classify failed"):
        verify_parity(textures_result.model, "/no/such/model.json", probes)
