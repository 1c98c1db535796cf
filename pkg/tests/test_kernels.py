"""Parity of the optimized forward kernels against the brute-force reference."""

import numpy as np
import pytest

from pixelstorm.kernels import available_backends, get_backend
from pixelstorm.kernels.common import conv_geometry, pool_geometry

from reference_kernels import avgpool_ref, conv2d_ref, dense_ref, maxpool_ref

BACKENDS = sorted(available_backends())


def backends():
    return [available_backends()[name] for name in BACKENDS]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return available_backends()[request.param]


def test_compiled_backend_is_present():
    # the build is expected to produce it in this environment
    assert "cython" in BACKENDS


class TestGeometry:
    def test_valid(self):
        assert conv_geometry(6, 6, 3, 1, "valid")[:2] == (4, 4)
        assert conv_geometry(7, 7, 3, 2, "valid")[:2] == (3, 3)

    def test_same_keeps_size_at_stride_one(self):
        h, w, pt, pb, pl, pr = conv_geometry(8, 8, 3, 1, "same")
        assert (h, w) == (8, 8) and (pt, pb, pl, pr) == (1, 1, 1, 1)

    def test_same_with_stride(self):
        h, w, *_ = conv_geometry(7, 7, 3, 2, "same")
        assert (h, w) == (4, 4)

    def test_kernel_too_large(self):
        with pytest.raises(ValueError):
            conv_geometry(2, 2, 3, 1, "valid")

    def test_unknown_padding(self):
        with pytest.raises(ValueError):
            conv_geometry(4, 4, 3, 1, "full")

    def test_pool_rejects_partial_windows(self):
        with pytest.raises(ValueError):
            pool_geometry(5, 5, 2, 2)
        assert pool_geometry(6, 6, 2, 2) == (3, 3)


class TestConstantField:
    def test_all_ones_kernel_on_constant_image(self, backend):
        v = 0.4
        x = np.full((1, 6, 6, 1), v)
        w = np.ones((3, 3, 1, 1))
        out = backend.conv2d(x, w, np.array([0.25]), 1, "valid")
        assert out.shape == (1, 4, 4, 1)
        assert np.allclose(out, 9 * v + 0.25)


class TestParity:
    @pytest.mark.parametrize("case", range(20))
    def test_conv_parity_cases(self, backend, case):
        rng = np.random.default_rng(case)
        h = int(rng.integers(4, 9))
        w = int(rng.integers(4, 9))
        cin = int(rng.integers(1, 4))
        cout = int(rng.integers(1, 5))
        k = int(rng.choice([1, 3]))
        stride = int(rng.choice([1, 2]))
        padding = str(rng.choice(["same", "valid"]))
        x = rng.normal(size=(1, h, w, cin))
        wgt = rng.normal(size=(k, k, cin, cout))
        b = rng.normal(size=cout)
        got = backend.conv2d(x, wgt, b, stride, padding)[0]
        ref = conv2d_ref(x[0], wgt, b, stride, padding)
        assert got.shape == ref.shape
        assert np.abs(got - ref).max() < 1e-5

    @pytest.mark.parametrize("case", range(10))
    def test_pool_parity_cases(self, backend, case):
        rng = np.random.default_rng(100 + case)
        k, s = (2, 2) if case % 2 == 0 else (3, 3)
        h = k + s * int(rng.integers(1, 4))
        c = int(rng.integers(1, 4))
        x = rng.normal(size=(1, h, h, c))
        assert np.abs(backend.maxpool(x, k, s)[0] - maxpool_ref(x[0], k, s)).max() < 1e-5
        assert np.abs(backend.avgpool(x, k, s)[0] - avgpool_ref(x[0], k, s)).max() < 1e-5

    @pytest.mark.parametrize("case", range(10))
    def test_dense_parity_cases(self, backend, case):
        rng = np.random.default_rng(200 + case)
        n, m = int(rng.integers(2, 40)), int(rng.integers(2, 12))
        x = rng.normal(size=(1, n))
        w = rng.normal(size=(n, m))
        b = rng.normal(size=m)
        assert np.abs(backend.dense(x, w, b)[0] - dense_ref(x[0], w, b)).max() < 1e-5


def test_backends_agree_with_each_other():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend built")
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 8, 8, 3))
    w = rng.normal(size=(3, 3, 3, 5))
    b = rng.normal(size=5)
    outs = [bk.conv2d(x, w, b, 1, "same") for bk in backends()]
    assert np.abs(outs[0] - outs[1]).max() < 1e-10


def test_get_backend_by_name_and_env(monkeypatch):
    assert get_backend("numpy").NAME == "numpy"
    monkeypatch.setenv("PIXELSTORM_BACKEND", "numpy")
    assert get_backend().NAME == "numpy"
    monkeypatch.delenv("PIXELSTORM_BACKEND")
    with pytest.raises(ValueError, match="unknown backend"):
        get_backend("fortran")
