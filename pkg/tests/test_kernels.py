import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksforced import kernels
from ksforced import _kernels_py as ref

BACKENDS = kernels.available_backends()
NAMES = sorted(BACKENDS)


def arrays(seed, nx, ny, zeros=False):
    rng = np.random.default_rng(seed)
    u = rng.random((nx, ny)) + 0.01
    if zeros:
        u[rng.random((nx, ny)) < 0.3] = 0.0
    v = rng.standard_normal((nx, ny))
    return u, v


def test_python_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", NAMES)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.integers(2, 20), st.booleans())
def test_backends_agree(name, seed, nx, ny, zeros):
    mod = BACKENDS[name]
    u, v = arrays(seed, nx, ny, zeros)
    dx, dy = 1.0 / nx, 0.7 / ny
    fx, fy = mod.upwind_flux(u, v, dx, dy)
    rfx, rfy = ref.upwind_flux(u, v, dx, dy)
    np.testing.assert_allclose(fx, rfx, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(fy, rfy, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(
        mod.chemotaxis_divergence(u, v, dx, dy), ref.chemotaxis_divergence(u, v, dx, dy), rtol=1e-12, atol=1e-10
    )
    np.testing.assert_allclose(mod.divergence(rfx, rfy, dx, dy), ref.divergence(rfx, rfy, dx, dy), rtol=1e-12, atol=1e-10)
    assert mod.max_face_gradient(v, dx, dy) == pytest.approx(ref.max_face_gradient(v, dx, dy), rel=1e-14)
    assert mod.face_dissipation(u, v, dx, dy) == pytest.approx(ref.face_dissipation(u, v, dx, dy), rel=1e-11, abs=1e-9)
    assert mod.face_gradient_sq(v, dx, dy) == pytest.approx(ref.face_gradient_sq(v, dx, dy), rel=1e-12)


def test_divergence_telescopes():
    u, v = arrays(1, 17, 9)
    d = ref.chemotaxis_divergence(u, v, 0.1, 0.2)
    assert abs(np.sum(d)) < 1e-12 * np.sum(np.abs(d))


def test_upwind_donor_cell():
    u = np.array([[1.0], [2.0], [3.0]])
    v = np.array([[0.0], [1.0], [0.5]])
    fx, _ = ref.upwind_flux(u, v, 1.0, 1.0)
    # face 1: dv = +1, donor is the left cell (u=1); face 2: dv = -0.5, donor is the right cell (u=3)
    np.testing.assert_allclose(fx[:, 0], [0.0, 1.0, -1.5, 0.0])


def test_pure_python_switch():
    env = dict(os.environ, KSFORCED_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import ksforced; print(ksforced.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled backend not built")
def test_compiled_default():
    env = {k: v for k, v in os.environ.items() if k != "KSFORCED_PURE_PYTHON"}
    out = subprocess.run(
        [sys.executable, "-c", "import ksforced; print(ksforced.BACKEND)"], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "cython"
