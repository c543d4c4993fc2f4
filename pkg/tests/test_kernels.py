import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wsrsim import estimator
from wsrsim.estimator import AngleGrid, get_kernel
from wsrsim.errors import ValidationError

KERNELS = sorted(estimator._KERNELS)
needs_cython = pytest.mark.skipif("cython" not in estimator._KERNELS, reason="compiled kernel not built")


def _inputs(rng, n_t, n_c):
    h = rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t)
    disp = rng.uniform(-30, 30, (n_t, 3))
    u = rng.standard_normal((n_c, 3))
    return h, disp, u / np.linalg.norm(u, axis=1, keepdims=True)


@pytest.mark.parametrize("name", KERNELS)
@pytest.mark.parametrize("order", [1, 2])
def test_two_element_closed_form(name, order):
    # |1 + exp(-2 pi i m x)|^2 = 2 + 2 cos(2 pi m x), with x up to 1e4 cycles
    x = np.array([0.0, 0.125, 0.3, 17.77, 1234.5678, 9999.99])
    u = np.zeros((len(x), 3))
    u[:, 0] = 1.0
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        disp = np.array([[0.0, 0, 0], [xi, 0, 0]])
        out[i] = get_kernel(name)(np.ones(2, complex), disp, u[i : i + 1], order)[0]
    np.testing.assert_allclose(out, 2 + 2 * np.cos(2 * np.pi * order * x), atol=1e-11)


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.integers(1, 500), st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_cython_matches_numpy(n_t, n_c, seed, order):
    h, disp, u = _inputs(np.random.default_rng(seed), n_t, n_c)
    a = get_kernel("cython")(h, disp, u, order)
    b = get_kernel("numpy")(h, disp, u, order)
    scale = np.sum(np.abs(h)) ** 2
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12 * scale)


@pytest.mark.parametrize("name", KERNELS)
def test_partition_independent(name):
    h, disp, u = _inputs(np.random.default_rng(9), 200, 10_000)
    kern = get_kernel(name)
    full = kern(h, disp, u, 2)
    parts = np.concatenate([kern(h, disp, u[i : i + 777], 2) for i in range(0, len(u), 777)])
    np.testing.assert_array_equal(full, parts)


@pytest.mark.parametrize("name", KERNELS)
def test_empty_samples_give_zero(name):
    out = get_kernel(name)(np.zeros(0, complex), np.zeros((0, 3)), np.eye(3), 2)
    np.testing.assert_array_equal(out, np.zeros(3))


@pytest.mark.parametrize("name", KERNELS)
def test_nonnegative_and_bounded(name):
    h, disp, u = _inputs(np.random.default_rng(1), 100, 2000)
    out = get_kernel(name)(h, disp, u, 2)
    assert np.all(out >= 0)
    assert out.max() <= np.sum(np.abs(h)) ** 2 * (1 + 1e-12)


@pytest.mark.parametrize("name", KERNELS)
def test_full_grid_shape(name):
    h, disp, _ = _inputs(np.random.default_rng(2), 10, 1)
    out = get_kernel(name)(h, disp * 0.01, AngleGrid(5, 5).directions(), 2)
    assert out.shape == (72 * 37,)


def test_unknown_kernel():
    with pytest.raises(ValidationError):
        get_kernel("fortran")


def test_env_var_forces_fallback():
    code = "from wsrsim import estimator; print(estimator.BACKEND)"
    env = {**os.environ, "WSRSIM_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
