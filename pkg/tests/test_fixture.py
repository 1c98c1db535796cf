import numpy as np
import pytest

from pixelstorm.classifier import ModelOracle, classify, load_model, save_model
from pixelstorm.fixture import (
    FIXTURE_CLASSES,
    FIXTURE_SHAPE,
    fixture_probe_image,
    make_fixture_dataset,
    make_fixture_image,
    make_fixture_model,
)


class TestModel:
    @pytest.mark.parametrize("label", range(4))
    def test_probe_images_classified_confidently(self, label):
        model = make_fixture_model(seed=0)
        probs = classify(model, fixture_probe_image(label))
        assert int(np.argmax(probs)) == label
        assert probs[label] > 0.5

    def test_all_black_is_near_uniform(self):
        model = make_fixture_model(seed=0)
        probs = classify(model, np.zeros(FIXTURE_SHAPE, dtype=np.uint8))
        assert np.abs(probs - 0.25).max() < 0.02

    def test_same_seed_gives_identical_weights(self):
        a = make_fixture_model(seed=5)
        b = make_fixture_model(seed=5)
        assert np.array_equal(a.layers[0].weights, b.layers[0].weights)
        assert np.array_equal(a.layers[4].weights, b.layers[4].weights)

    def test_different_seed_changes_jitter(self):
        a = make_fixture_model(seed=1)
        b = make_fixture_model(seed=2)
        assert not np.array_equal(a.layers[0].weights, b.layers[0].weights)

    def test_survives_interchange_format(self, tmp_path):
        model = make_fixture_model(seed=0)
        save_model(model, tmp_path / "fixture.json")
        loaded = load_model(tmp_path / "fixture.json")
        img = fixture_probe_image(2)
        assert np.allclose(classify(loaded, img), classify(model, img), atol=1e-12)


class TestDataset:
    def test_shapes_labels_and_determinism(self):
        images, labels = make_fixture_dataset(seed=3, count=17)
        assert images.shape == (17,) + FIXTURE_SHAPE
        assert images.dtype == np.uint8
        assert set(np.unique(labels)) <= {0, 1, 2, 3}
        again, again_labels = make_fixture_dataset(seed=3, count=17)
        assert np.array_equal(images, again)
        assert np.array_equal(labels, again_labels)

    def test_model_separates_generated_images(self):
        model = make_fixture_model(seed=0)
        oracle = ModelOracle(model)
        images, labels = make_fixture_dataset(seed=0, count=60)
        preds = oracle.classify_batch(images).argmax(axis=1)
        # separation by construction: the scoring cell holds the only red block
        assert (preds == labels).mean() >= 0.95

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError):
            make_fixture_image(4, np.random.default_rng(0))

    def test_class_names(self):
        model = make_fixture_model(seed=0)
        assert model.class_names == FIXTURE_CLASSES == ["quad0", "quad1", "quad2", "quad3"]
