"""Numerical audits of the scalar and functional inequalities used in the
boundedness arguments.

Young's inequality and the implicit bound ``M <= C1 + C2 M^beta  =>  M <= M0``
carry explicit constants and are checked as true assertions. The
Trudinger-Moser and Biler-type inequalities only assert that *some* constant
exists, so for those the audit reports the empirical constant (the largest
observed ratio) and its stability under grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import optimize
from scipy.special import xlogy

from .errors import ParameterError
from .grid import Grid2D, face_differences

AMPLITUDE_CAP = 50.0
# Relative slack for floating-point rounding when an explicit bound is tight.
ROUNDING_SLACK = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class InequalityReport:
    """``worst_ratio`` is lhs/rhs for explicit bounds and the fitted constant otherwise."""

    name: str
    samples: int
    worst_ratio: float
    violated: bool
    witness: dict[str, Any] | None = None
    rejected: int = 0

    def summary(self) -> str:
        verdict = "VIOLATED" if self.violated else "ok"
        extra = f", {self.rejected} rejected" if self.rejected else ""
        return f"{self.name}: {self.samples} samples{extra}, worst ratio {self.worst_ratio:.6g} [{verdict}]"


# --- explicit scalar bounds -------------------------------------------------------


def young_constant(eps, p):
    q = p / (p - 1.0)
    return (eps * p) ** (-q / p) / q


def young_bound(a, b, eps, p):
    """``(a b, eps a^p + C(eps, p, q) b^q)`` with ``C = (eps p)^(-q/p) / q``.

    Works elementwise on arrays.
    """
    a, b, eps, p = (np.asarray(x, dtype=float) for x in (a, b, eps, p))
    if np.any(p <= 1.0) or np.any(np.isnan(p)):
        raise ParameterError("Young's inequality needs p > 1")
    if np.any(eps <= 0.0):
        raise ParameterError("eps must be positive")
    if np.any(a < 0.0) or np.any(b < 0.0):
        raise ParameterError("a and b must be nonnegative")
    q = p / (p - 1.0)
    lhs = a * b
    rhs = eps * a**p + young_constant(eps, p) * b**q
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


def malpha_bound(c1: float, c2: float, beta: float) -> float:
    """Bound ``M0 = 2 C1 + 2 C2 C(p,q) (2 C2)^(beta/(1-beta))`` with ``p = 1/beta``.

    Any ``M >= 0`` with ``M <= C1 + C2 M^beta`` satisfies ``M <= M0``.
    """
    if not (0.0 < beta < 1.0):
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    if not (c1 > 0 and c2 > 0):
        raise ParameterError("C1 and C2 must be positive")
    p = 1.0 / beta
    cpq = (p - 1.0) / p ** (p / (p - 1.0))
    return 2.0 * c1 + 2.0 * c2 * cpq * (2.0 * c2) ** (beta / (1.0 - beta))


def malpha_fixed_point(c1: float, c2: float, beta: float) -> float:
    """Largest ``M`` with ``M = C1 + C2 M^beta``, by bisection."""
    def h(m):
        return m - c1 - c2 * m**beta

    hi = max(1.0, c1 + c2)
    while h(hi) <= 0.0:
        hi *= 2.0
    return optimize.bisect(h, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)


def _rng_streams(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def young_audit(count: int = 100_000, seed: int = 0) -> InequalityReport:
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    a = 10.0 ** rng.uniform(-3, 1, count)
    b = 10.0 ** rng.uniform(-3, 1, count)
    eps = 10.0 ** rng.uniform(-2, 1, count)
    p = rng.uniform(1.05, 10.0, count)
    lhs, rhs = young_bound(a, b, eps, p)
    ratio = lhs / rhs
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    witness = {"a": float(a[k]), "b": float(b[k]), "eps": float(eps[k]), "p": float(p[k])}
    return InequalityReport("young", count, worst, worst > 1.0 + ROUNDING_SLACK, witness)


def malpha_audit(count: int = 10_000, seed: int = 0) -> InequalityReport:
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
    c1 = 10.0 ** rng.uniform(-3, 3, count)
    c2 = 10.0 ** rng.uniform(-3, 3, count)
    beta = rng.uniform(0.05, 0.95, count)
    worst, witness = -math.inf, None
    for x1, x2, b in zip(c1, c2, beta):
        r = malpha_fixed_point(x1, x2, b) / malpha_bound(x1, x2, b)
        if r > worst:
            worst, witness = r, {"c1": float(x1), "c2": float(x2), "beta": float(b)}
    return InequalityReport("malpha", count, float(worst), worst > 1.0 + ROUNDING_SLACK, witness)


# --- band-limited random fields ------------------------------------------------------


@dataclass(frozen=True)
class FieldSampler:
    """Random cosine series ``sum c_jk cos(j pi x / lx) cos(k pi y / ly)``, ``j, k < band``.

    Coefficients are normal with standard deviation ``(1 + j^2 + k^2)^(-decay/2)``,
    then the series is rescaled so that ``sum |c_jk|`` (a bound for the sup norm)
    equals a uniform random amplitude in ``(0, amplitude]``. Fields are evaluated
    analytically, so the same seed gives the same functions on every grid.
    """

    grid: Grid2D
    seed: int = 0
    band: int = 16
    decay: float = 1.5
    amplitude: float = 8.0

    def __post_init__(self):
        if self.band < 1:
            raise ParameterError("band must be >= 1")
        if 4 * self.band > min(self.grid.nx, self.grid.ny):
            raise ParameterError(f"band {self.band} exceeds a quarter of the grid {self.grid.shape}")
        if not self.amplitude > 0:
            raise ParameterError("amplitude must be positive")

    def coefficients(self, rng: np.random.Generator) -> np.ndarray:
        j = np.arange(self.band)
        std = (1.0 + j[:, None] ** 2 + j[None, :] ** 2) ** (-self.decay / 2)
        c = rng.standard_normal((self.band, self.band)) * std
        amp = self.amplitude * (1.0 - rng.random())  # in (0, amplitude]
        return c * (amp / np.sum(np.abs(c)))

    def evaluate(self, coeffs: np.ndarray) -> np.ndarray:
        g = self.grid
        x, y = g.centers()
        j = np.arange(coeffs.shape[0])
        cx = np.cos(np.pi * np.outer(x, j) / g.lx)
        cy = np.cos(np.pi * np.outer(y, j) / g.ly)
        return cx @ coeffs @ cy.T

    def samples(self, count: int):
        """Yield ``count`` fields, each from its own stream of the master seed."""
        for rng in _rng_streams(self.seed, count):
            yield self.evaluate(self.coefficients(rng))


def _grad_l2_sq(v: np.ndarray, grid: Grid2D) -> float:
    gx, gy = face_differences(v, grid.dx, grid.dy)
    return float(np.sum(gx * gx) + np.sum(gy * gy)) * grid.cell_area


def tm_ratio(v: np.ndarray, grid: Grid2D) -> float:
    """``int e^|v| / exp(||grad v||_2^2 / (8 pi) + ||v||_1 / |Omega|)``, evaluated in log space."""
    da = grid.cell_area
    a = np.abs(v)
    amax = float(np.max(a))
    log_lhs = amax + math.log(float(np.sum(np.exp(a - amax))) * da)
    exponent = _grad_l2_sq(v, grid) / (8 * math.pi) + float(np.sum(a)) * da / grid.area
    return math.exp(log_lhs - exponent)


def trudinger_moser_check(sampler: FieldSampler, count: int = 500) -> InequalityReport:
    grid = sampler.grid
    worst, witness, rejected = 0.0, None, 0
    for idx, v in enumerate(sampler.samples(count)):
        if np.max(np.abs(v)) > AMPLITUDE_CAP:
            rejected += 1
            continue
        r = tm_ratio(v, grid)
        if r > worst:
            worst, witness = r, {"sample": idx}
    return InequalityReport("trudinger_moser", count - rejected, worst, False, witness, rejected)


def biler_terms(v: np.ndarray, grid: Grid2D, p: float) -> tuple[float, float, float]:
    """``(||v||_p, ||grad v||_2^(1-1/p) ||v log|v|||_1^(1/p), bracket)``."""
    da = grid.cell_area
    a = np.abs(v)
    vp = float(np.sum(a**p) * da) ** (1.0 / p)
    vlogv = float(np.sum(np.abs(xlogy(v, a)))) * da
    v1 = float(np.sum(a)) * da
    first = math.sqrt(_grad_l2_sq(v, grid)) ** (1.0 - 1.0 / p) * vlogv ** (1.0 / p)
    bracket = vlogv + v1 ** (1.0 / p) + v1
    return vp, first, bracket


def biler_ratio(v: np.ndarray, grid: Grid2D, p: float, eps: float) -> float | None:
    vp, first, bracket = biler_terms(v, grid, p)
    if bracket == 0.0:
        return None
    return (vp - eps * first) / bracket


def biler_check(sampler: FieldSampler, p: float, eps: float, count: int = 500, scale: float = 1.0) -> InequalityReport:
    """Fitted constant of the Biler-type inequality for one ``(p, eps)``.

    ``scale`` multiplies every sampled field (for the scaling audit).
    """
    if not p >= 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    worst, witness, skipped = -math.inf, None, 0
    for idx, v in enumerate(sampler.samples(count)):
        r = biler_ratio(scale * v, sampler.grid, p, eps)
        if r is None:
            skipped += 1
            continue
        if r > worst:
            worst, witness = r, {"sample": idx}
    return InequalityReport(f"biler[p={p:g},eps={eps:g}]", count - skipped, float(worst), False, witness, skipped)


def refinement_change(coarse: InequalityReport, fine: InequalityReport) -> float:
    """Relative change of a fitted constant between two grids."""
    return abs(fine.worst_ratio - coarse.worst_ratio) / abs(fine.worst_ratio)


__all__ = [
    "AMPLITUDE_CAP",
    "InequalityReport",
    "young_bound",
    "young_constant",
    "young_audit",
    "malpha_bound",
    "malpha_fixed_point",
    "malpha_audit",
    "FieldSampler",
    "tm_ratio",
    "trudinger_moser_check",
    "biler_terms",
    "biler_ratio",
    "biler_check",
    "refinement_change",
]
