"""Exact discrete Neumann heat semigroup and semigroup-estimate checks.

The orthonormal type-II DCT diagonalizes the five-point Neumann Laplacian on a
cell-centered grid, with eigenvalues

    mu_jk = (4/dx^2) sin^2(j pi / 2nx) + (4/dy^2) sin^2(k pi / 2ny)

(identical to ``(2/dx^2)(1 - cos(j pi/nx)) + ...``). Semigroups and implicit
resolvents are therefore exact elementwise multiplications of coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy.fft import dctn, idctn

from .errors import InsufficientDataError, ParameterError, QuadratureError
from .grid import Grid2D, ScalarField, lp_norm, w1p_norm, w1p_seminorm
from .operators import chemotactic_flux, flux_divergence


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Orthonormal cosine-basis coefficients ``coeffs[j, k]`` of a field."""

    grid: Grid2D
    coeffs: np.ndarray

    def weighted_norm(self) -> float:
        """Equals the discrete L2 norm of the represented field (Parseval)."""
        return math.sqrt(float(np.sum(self.coeffs**2)) * self.grid.cell_area)


@lru_cache(maxsize=32)
def _eigenvalues(grid: Grid2D) -> np.ndarray:
    j = np.arange(grid.nx)
    k = np.arange(grid.ny)
    mx = (4.0 / grid.dx**2) * np.sin(j * np.pi / (2 * grid.nx)) ** 2
    my = (4.0 / grid.dy**2) * np.sin(k * np.pi / (2 * grid.ny)) ** 2
    mu = mx[:, None] + my[None, :]
    mu.flags.writeable = False
    return mu


def eigenvalues(grid: Grid2D) -> np.ndarray:
    """Eigenvalues of ``-Delta_h`` indexed like the coefficients (read-only)."""
    return _eigenvalues(grid)


def dct2(a: np.ndarray) -> np.ndarray:
    return dctn(a, type=2, norm="ortho")


def idct2(c: np.ndarray) -> np.ndarray:
    return idctn(c, type=2, norm="ortho")


def cosine_transform(field: ScalarField) -> SpectralCoeffs:
    return SpectralCoeffs(field.grid, dct2(field.values))


def inverse_cosine_transform(coeffs: SpectralCoeffs) -> ScalarField:
    return ScalarField(coeffs.grid, idct2(coeffs.coeffs))


def mode_field(grid: Grid2D, j: int, k: int) -> ScalarField:
    """The (unnormalized) eigenmode ``cos(j pi x/lx) cos(k pi y/ly)`` at cell centers."""
    X, Y = grid.mesh()
    return ScalarField(grid, np.cos(j * np.pi * X / grid.lx) * np.cos(k * np.pi * Y / grid.ly))


def heat_semigroup(field: ScalarField, t: float) -> ScalarField:
    """``e^{t Delta_h} field``."""
    if t < 0 or math.isnan(t):
        raise ParameterError(f"semigroup time must be >= 0, got {t}")
    if t == 0:
        return field
    mu = eigenvalues(field.grid)
    return ScalarField(field.grid, idct2(dct2(field.values) * np.exp(-mu * t)))


def damped_semigroup(field: ScalarField, t: float) -> ScalarField:
    """``e^{t(Delta_h - 1)} field``, computed as ``e^{-t} e^{t Delta_h}``."""
    return math.exp(-t) * heat_semigroup(field, t)


def lambda1(grid: Grid2D) -> float:
    """Smallest nonzero eigenvalue of ``-Delta_h``."""
    mu = eigenvalues(grid)
    return float(min(mu[1, 0], mu[0, 1]))


# --- mild solution residual ---------------------------------------------------


def _phi_weights(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights for the left/right node of ``int_0^1 e^{-z(1-x)} g(x) dx`` with g linear."""
    z = np.asarray(z, dtype=float)
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    em = np.exp(-zs)
    phi1 = -np.expm1(-zs) / zs
    left = (1.0 - em * (1.0 + zs)) / zs**2
    right = (1.0 - phi1) / zs
    z2 = z * z
    left = np.where(small, 0.5 - z / 3.0 + z2 / 8.0 - z2 * z / 30.0, left)
    right = np.where(small, 0.5 - z / 6.0 + z2 / 24.0 - z2 * z / 120.0, right)
    return left, right


def _duhamel(rate: np.ndarray, h: float, samples: Sequence[np.ndarray]) -> np.ndarray:
    """``int_0^T e^{-rate (T-s)} G(s) ds`` with G piecewise linear between samples.

    ``samples`` are coefficient arrays at uniformly spaced times ``0, h, ..., T``.
    The exponential is integrated exactly against each linear piece, so the
    only error is the interpolation of G (second order in ``h``).
    """
    wl, wr = _phi_weights(rate * h)
    decay = np.exp(-rate * h)
    acc = np.zeros_like(samples[0])
    for a, b in zip(samples[:-1], samples[1:]):
        acc = decay * acc + h * (wl * a + wr * b)
    return acc


def _uniform_spacing(times: np.ndarray) -> float:
    steps = np.diff(times)
    h = float(steps.mean())
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(h, 1.0):
        raise InsufficientDataError("mild residual needs uniformly spaced snapshots")
    return h


def mild_residual(trajectory, tau: float, f, theta: float = 3.0, chemotaxis: bool = True) -> tuple[float, float]:
    """Distance of the final snapshot from the variation-of-constants map.

    ``trajectory`` is a sequence of states (``.u``, ``.v``, ``.t``) at uniform
    spacing, or an object with a ``snapshots`` attribute. Returns
    ``(||u(T) - Phi1(T)||_inf, ||v(T) - Phi2(T)||_{W^{1,theta}})`` with

        Phi1 = e^{T Delta} u0 - int_0^T e^{(T-s) Delta} div(u grad v)(s) ds
        Phi2 = e^{(T/tau)(Delta-1)} v0 + (1/tau) int_0^T e^{((T-s)/tau)(Delta-1)} (u + f)(s) ds
    """
    states = list(getattr(trajectory, "snapshots", trajectory))
    if len(states) < 3:
        raise InsufficientDataError(f"need at least 3 snapshots, got {len(states)}")
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    grid = states[0].u.grid
    times = np.array([s.t for s in states])
    h = _uniform_spacing(times)
    T = times[-1] - times[0]
    mu = eigenvalues(grid)

    u0 = dct2(states[0].u.values)
    if chemotaxis:
        drift = [dct2(flux_divergence(chemotactic_flux(s.u, s.v)).values) for s in states]
        phi1 = np.exp(-mu * T) * u0 - _duhamel(mu, h, drift)
    else:
        phi1 = np.exp(-mu * T) * u0

    kappa = (1.0 + mu) / tau
    src = [dct2(s.u.values + f.sample(grid, s.t).values) for s in states]
    phi2 = np.exp(-kappa * T) * dct2(states[0].v.values) + _duhamel(kappa, h, src) / tau

    ru = ScalarField(grid, states[-1].u.values - idct2(phi1))
    rv = ScalarField(grid, states[-1].v.values - idct2(phi2))
    return lp_norm(ru, math.inf), w1p_norm(rv, theta)


# --- convolution-integral lemma -----------------------------------------------


@dataclass(frozen=True)
class SemigroupParams:
    """Exponents and rates of the two-kernel convolution estimate."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        if not (self.alpha < 1 and self.beta < 1):
            raise ParameterError(f"need alpha < 1 and beta < 1, got {self.alpha}, {self.beta}")
        if not (self.gamma > 0 and self.delta > 0):
            raise ParameterError("gamma and delta must be positive")
        if self.gamma == self.delta:
            raise ParameterError("gamma and delta must differ")


def _half_integral(func, length: float, power: float) -> tuple[float, float, int]:
    """``int_0^length func(x) (1 + x^{-power}) dx`` after the substitution x = sigma^k.

    With ``k = 1/(1-power)`` the algebraic endpoint singularity cancels
    against the Jacobian, leaving a smooth integrand in sigma.
    """
    k = 1.0 / (1.0 - power) if power > 0 else 1.0

    def g(sig):
        x = sig**k
        jac = k * sig ** (k - 1.0) if k != 1.0 else 1.0
        sing = sig ** (k * (1.0 - power) - 1.0) * k if power > 0 else x ** (-power)
        return func(x) * (jac + sing)

    upper = length ** (1.0 / k)
    val, err, info = sp_integrate.quad(g, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=400, full_output=1)[:3]
    return val, err, info["neval"]


def _check_quad(res, t, side):
    val, err, _ = res
    if not math.isfinite(val) or err > 1e-9 * max(abs(val), 1e-300):
        raise QuadratureError(f"convolution quadrature did not converge at t={t} ({side}: value={val}, err={err})")
    return val


def convolution_integral(p: SemigroupParams, t: float) -> float:
    """``int_0^t (1+(t-s)^-a) e^{-g(t-s)} (1+s^-b) e^{-d s} ds`` by adaptive quadrature."""
    return _scaled_convolution(p, t) * math.exp(-min(p.gamma, p.delta) * t)


def _scaled_convolution(p: SemigroupParams, t: float) -> float:
    # Everything is multiplied by e^{min(gamma,delta) t} to stay O(1) at large t.
    if t <= 0:
        raise ParameterError(f"t must be positive, got {t}")
    m = min(p.gamma, p.delta)
    half = 0.5 * t

    def near_zero(s):  # integrand without its (1 + s^-beta) factor
        r = t - s
        return (1.0 + r ** (-p.alpha)) * math.exp(-p.gamma * r - p.delta * s + m * t)

    def near_t(r):  # integrand without its (1 + r^-alpha) factor, r = t - s
        s = t - r
        return (1.0 + s ** (-p.beta)) * math.exp(-p.gamma * r - p.delta * s + m * t)

    left = _check_quad(_half_integral(near_zero, half, p.beta), t, "left")
    right = _check_quad(_half_integral(near_t, half, p.alpha), t, "right")
    return left + right


def convolution_envelope(p: SemigroupParams, t: float) -> float:
    """Right-hand side of the lemma with C = 1."""
    return (1.0 + t ** min(0.0, 1.0 - p.alpha - p.beta)) * math.exp(-min(p.gamma, p.delta) * t)


def convolution_bound_check(p: SemigroupParams, t_grid: Sequence[float]) -> float:
    """Empirical constant: sup over ``t_grid`` of integral / envelope."""
    worst = 0.0
    for t in t_grid:
        t = float(t)
        ratio = _scaled_convolution(p, t) / (1.0 + t ** min(0.0, 1.0 - p.alpha - p.beta))
        worst = max(worst, ratio)
    return worst


# --- gradient smoothing estimate ---------------------------------------------


def smoothing_estimate_check(w: ScalarField, q: float, theta: float, t_grid: Sequence[float]) -> float:
    """sup_t ||grad e^{t Delta} w||_theta / [(1 + t^{-1/2-(1/q-1/theta)}) e^{-lambda1 t} ||w||_q]."""
    q = float(q)
    theta = float(theta)
    if not (1.0 <= q <= theta):
        raise ParameterError(f"need 1 <= q <= theta, got q={q}, theta={theta}")
    wq = lp_norm(w, q)
    if wq == 0.0:
        return 0.0
    lam = lambda1(w.grid)
    expo = -0.5 - (1.0 / q - (0.0 if math.isinf(theta) else 1.0 / theta))
    worst = 0.0
    for t in t_grid:
        t = float(t)
        if t <= 0:
            raise ParameterError("smoothing check needs positive times")
        num = w1p_seminorm(heat_semigroup(w, t), theta)
        den = (1.0 + t**expo) * math.exp(-lam * t) * wq
        worst = max(worst, num / den)
    return worst
