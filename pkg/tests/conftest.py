import math

import numpy as np
import pytest
from hypothesis import settings

from ksforced import Grid2D, ScalarField

settings.register_profile("ci", deadline=None, max_examples=40)
settings.load_profile("ci")

FOUR_PI = 4 * math.pi


def gaussian(grid, mass, width, center=(0.5, 0.5)):
    X, Y = grid.mesh()
    prof = np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width**2))
    return ScalarField(grid, prof * mass / (prof.sum() * grid.cell_area))


def random_field(grid, seed=0, positive=False):
    rng = np.random.default_rng(seed)
    a = rng.random(grid.shape) + 0.1 if positive else rng.standard_normal(grid.shape)
    return ScalarField(grid, a)


@pytest.fixture
def grid64():
    return Grid2D(64, 64)


@pytest.fixture
def grid32():
    return Grid2D(32, 32)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE: dict[int, str] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE[n] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
