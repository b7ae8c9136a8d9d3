"""Scalar observables of a run: mass, the exact ||v||_1 law, the energy W and its
dissipation, boundedness ledgers, and the small-data decay fits.

The energy uses the face-difference form of ``|grad v|^2`` and the dissipation
is written over faces with the scheme's own upwind weights, so that along the
semi-discrete flow ``dW/dt + dissipation = 0`` holds exactly and the recorded
residual measures time-stepping error only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import xlogy

from . import kernels
from .errors import DomainError, InsufficientDataError, ParameterError
from .grid import ScalarField, integrate, lp_norm, same_grid, w1p_seminorm
from .semigroup import dct2, eigenvalues, heat_semigroup, idct2, lambda1

NEG_TOL = 1e-13

CSV_FIELDS = (
    "t",
    "mass_u",
    "v_l1",
    "v_l1_exact",
    "u_linf",
    "u_l2",
    "v_w1theta",
    "energy_w",
    "dissipation",
    "energy_residual",
    "fv_integral",
    "ulogu_l1",
    "vt_l2_accum",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_u: float
    v_l1: float
    v_l1_exact: float
    u_linf: float
    u_l2: float
    v_w1theta: float
    energy_w: float
    dissipation: float
    energy_residual: float
    fv_integral: float
    ulogu_l1: float
    vt_l2_accum: float
    # not part of the CSV schema; kept for the bounds ledger
    uv_integral: float = 0.0
    grad_v_theta: float = 0.0

    def csv_values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in CSV_FIELDS)

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self))


def _nonneg_density(u: np.ndarray) -> np.ndarray:
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    if np.min(u) < -NEG_TOL * max(umax, 1e-300):
        raise DomainError(f"density has negative entries (min {np.min(u):.3e}) beyond roundoff")
    return np.maximum(u, 0.0)


def energy_w(u: ScalarField, v: ScalarField, f: ScalarField | None = None) -> float:
    """``W = int [u log u - u v + (|grad v|^2 + v^2)/2 - f v]`` with ``0 log 0 = 0``."""
    grid = same_grid(u, v) if f is None else same_grid(u, v, f)
    ua = _nonneg_density(u.values)
    va = v.values
    dens = xlogy(ua, ua) - ua * va + 0.5 * va * va
    if f is not None:
        dens = dens - f.values * va
    grad_sq = kernels.face_gradient_sq(va, grid.dx, grid.dy)
    return (float(np.sum(dens)) + 0.5 * grad_sq) * grid.cell_area


def dissipation(u: ScalarField, v: ScalarField, v_prev: ScalarField, dt: float, tau: float) -> float:
    """``int u |grad(log u - v)|^2 + tau int ((v - v_prev)/dt)^2``.

    The first term is summed over faces as ``(grad u - u_up grad v)(grad log u - grad v)``
    where ``u_up`` is the donor-cell value used by the solver; faces touching a
    cell with ``u <= 1e-300`` are skipped.
    """
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    grid = same_grid(u, v, v_prev)
    ua = _nonneg_density(u.values)
    first = kernels.face_dissipation(np.ascontiguousarray(ua), v.values, grid.dx, grid.dy)
    vt = (v.values - v_prev.values) / dt
    return (first + tau * float(np.sum(vt * vt))) * grid.cell_area


def v_l1_exact(t: float, v0_l1: float, u0_l1: float, f, tau: float) -> float:
    """Closed-form ``||v(t)||_1`` for nonnegative solutions.

    ``f`` is a forcing spec (``None`` means zero). The forcing integral is
    analytic for time-independent f and uses adaptive quadrature otherwise.
    """
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    decay = math.exp(-t / tau)
    grow = -math.expm1(-t / tau)
    val = decay * v0_l1 + u0_l1 * grow
    if f is None or f.mode == "zero" or t == 0:
        return val
    if f.is_constant_in_time:
        return val + f.l1_norm(0.0) * grow
    forced, _ = sp_integrate.quad(
        lambda s: f.l1_norm(s) * math.exp((s - t) / tau), 0.0, t, epsabs=0.0, epsrel=1e-12, limit=200
    )
    return val + forced / tau


def make_record(
    state,
    prev_state,
    dt: float,
    f_field: np.ndarray | None,
    tau: float,
    theta: float,
    v_l1_law: float,
    prev_energy: float | None,
    vt_accum: float,
) -> DiagnosticsRecord:
    """Assemble one record for ``state``; ``prev_state`` is None for the initial record."""
    u, v = state.u, state.v
    grid = u.grid
    f_sf = None if f_field is None else ScalarField(grid, f_field)
    w = energy_w(u, v, f_sf)
    if prev_state is None:
        diss = dissipation(u, v, v, 1.0, tau)
        resid = 0.0
    else:
        diss = dissipation(u, v, prev_state.v, dt, tau)
        resid = (w - prev_energy) / dt + diss
    ua = np.maximum(u.values, 0.0)
    grad_theta = w1p_seminorm(v, theta)
    v_theta = lp_norm(v, theta)
    m = max(v_theta, grad_theta)
    v_w1 = 0.0 if m == 0 else m * ((v_theta / m) ** theta + (grad_theta / m) ** theta) ** (1.0 / theta)
    area = grid.cell_area
    return DiagnosticsRecord(
        t=state.t,
        mass_u=integrate(u),
        v_l1=lp_norm(v, 1.0),
        v_l1_exact=v_l1_law,
        u_linf=lp_norm(u, math.inf),
        u_l2=lp_norm(u, 2.0),
        v_w1theta=v_w1,
        energy_w=w,
        dissipation=diss,
        energy_residual=resid,
        fv_integral=0.0 if f_field is None else float(np.sum(f_field * v.values)) * area,
        ulogu_l1=float(np.sum(np.abs(xlogy(ua, ua)))) * area,
        vt_l2_accum=vt_accum,
        uv_integral=float(np.sum(u.values * v.values)) * area,
        grad_v_theta=grad_theta,
    )


# --- boundedness ledger -----------------------------------------------------------

LEDGER_OBSERVABLES = (
    ("uv_integral", lambda r: r.uv_integral),
    ("abs_energy", lambda r: abs(r.energy_w)),
    ("u_l2", lambda r: r.u_l2),
    ("grad_v_theta", lambda r: r.grad_v_theta),
    ("u_linf", lambda r: r.u_linf),
    ("ulogu_l1", lambda r: r.ulogu_l1),
    ("vt_l2_accum", lambda r: r.vt_l2_accum),
    ("fv_integral", lambda r: r.fv_integral),
)

PLATEAU_FACTOR = 1.05
PLATEAU_FLOOR = 1e-12  # growth below this is roundoff on a zero observable


def _plateau(at_end: float, at_half: float) -> bool:
    return bool(np.isfinite(at_end)) and at_end <= PLATEAU_FACTOR * at_half + PLATEAU_FLOOR


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    max_at_end: float
    max_at_half: float
    plateau: bool


@dataclass(frozen=True)
class BoundsReport:
    t_end: float
    entries: tuple[LedgerEntry, ...]

    @property
    def all_plateau(self) -> bool:
        return all(e.plateau for e in self.entries)

    def entry(self, name: str) -> LedgerEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [e.name for e in self.entries if not e.plateau]


def bounds_ledger(trajectory) -> BoundsReport:
    """Running maxima of the bounded-in-time observables and their plateau verdicts.

    An observable passes when its running maximum at the final time is at most
    1.05 times its running maximum at half the final time, plus 1e-12.
    """
    records = list(getattr(trajectory, "records", trajectory))
    if not records:
        raise InsufficientDataError("empty trajectory")
    times = np.array([r.t for r in records])
    t_end = float(times[-1])
    half_idx = int(np.searchsorted(times, 0.5 * t_end, side="right")) - 1
    half_idx = max(half_idx, 0)
    entries = []
    for name, get in LEDGER_OBSERVABLES:
        running = np.maximum.accumulate(np.array([get(r) for r in records], dtype=float))
        at_end = float(running[-1])
        at_half = float(running[half_idx])
        entries.append(LedgerEntry(name, at_end, at_half, _plateau(at_end, at_half)))
    return BoundsReport(t_end, tuple(entries))


def energy_monotone(trajectory, rel_tol: float = 1e-8) -> tuple[bool, float]:
    """Whether W never increases by more than ``rel_tol (1 + |W|)`` between records.

    Returns ``(ok, worst)`` where ``worst`` is the largest normalized increase.
    """
    records = list(getattr(trajectory, "records", trajectory))
    worst = -math.inf
    for a, b in zip(records[:-1], records[1:]):
        inc = (b.energy_w - a.energy_w) / (1.0 + abs(a.energy_w))
        worst = max(worst, inc)
    return worst <= rel_tol, worst


# --- small-data decay checks ----------------------------------------------------


@dataclass(frozen=True)
class DecayCheckParams:
    theta: float = 3.0
    delta0: float = 0.5
    r: float = 2.0
    n: int = 2
    epsilon: float = 1e-3

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n}", "n")
        if not (0 < self.delta0 < 1):
            raise ParameterError(f"delta0 must lie in (0, 1), got {self.delta0}", "delta0")
        if not self.r > 1:
            raise ParameterError(f"r must exceed 1, got {self.r}", "r")
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}", "epsilon")
        upper = theta_upper_bound(self.n, self.delta0)
        if not (self.n < self.theta < upper):
            raise ParameterError(f"theta must satisfy {self.n} < theta < {upper:g}, got {self.theta}", "theta")

    @property
    def q0(self) -> float:
        return self.n / 2 + self.delta0


def theta_upper_bound(n: int, delta0: float) -> float:
    return (n * n + 2 * n * delta0) / (n - 2 * delta0)


@dataclass(frozen=True)
class DecayFit:
    """``c_envelope``: least C with residual <= C * envelope on all t > 1.
    ``c_tail``: sup of residual / (non-decaying part of the envelope) over the
    second half of the window."""

    c_envelope: float
    c_tail: float
    times: tuple[float, ...]
    residuals: tuple[float, ...]

    def __iter__(self):
        yield self.c_envelope
        yield self.c_tail


def _late_snapshots(trajectory):
    snaps = [s for s in trajectory.snapshots if s.t > 1.0]
    if not snaps:
        raise InsufficientDataError("decay checks need snapshots beyond t = 1")
    return snaps


def _fit(times, resid, envelope, tail_scale) -> DecayFit:
    times = np.asarray(times)
    resid = np.asarray(resid)

    def ratio(num, den):
        out = np.zeros_like(num)
        pos = den > 0
        out[pos] = num[pos] / den[pos]
        out[~pos & (num > 0)] = math.inf
        return out

    c_env = float(np.max(ratio(resid, envelope)))
    second = times >= 0.5 * (times[0] + times[-1])
    c_tail = float(np.max(ratio(resid[second], np.full(int(second.sum()), tail_scale))))
    return DecayFit(c_env, c_tail, tuple(float(t) for t in times), tuple(float(x) for x in resid))


def decay_check_u(trajectory, params: DecayCheckParams) -> DecayFit:
    """Fit ``||u(t) - e^{t Delta} u0||_inf <= C eps^2 e^{-lambda1 t / r} + C eps^2``."""
    snaps = _late_snapshots(trajectory)
    u0 = trajectory.snapshots[0].u
    lam = lambda1(u0.grid)
    eps2 = params.epsilon**2
    times, resid = [], []
    for s in snaps:
        times.append(s.t)
        resid.append(lp_norm(s.u - heat_semigroup(u0, s.t), math.inf))
    env = eps2 * np.exp(-lam * np.asarray(times) / params.r) + eps2
    return _fit(times, resid, env, eps2)


def linear_v_flow(u0: ScalarField, v0: ScalarField, t: float, tau: float) -> ScalarField:
    """``e^{(t/tau)(Delta-1)} v0 + (1/tau) int_0^t e^{((t-s)/tau)(Delta-1)} e^{s Delta} u0 ds``.

    Both semigroups are diagonal in the cosine basis, so the time integral is
    evaluated in closed form per mode.
    """
    grid = same_grid(u0, v0)
    mu = eigenvalues(grid)
    a = (1.0 + mu) / tau
    b = mu
    d = a - b  # = (1 + mu (1 - tau)) / tau, may vanish
    small = np.abs(d * t) < 1e-12
    dsafe = np.where(small, 1.0, d)
    # int_0^t e^{-a(t-s)} e^{-b s} ds = e^{-b t} (1 - e^{-d t}) / d
    kern = np.where(small, t, -np.expm1(-dsafe * t) / dsafe) * np.exp(-b * t)
    coeff = np.exp(-a * t) * dct2(v0.values) + kern * dct2(u0.values) / tau
    return ScalarField(grid, idct2(coeff))


def decay_check_v(trajectory, params: DecayCheckParams, tau: float) -> DecayFit:
    """Fit ``||grad(v - linear flow)||_theta <= C eps^2 e^{-lambda1 t / r} + C eps``."""
    snaps = _late_snapshots(trajectory)
    first = trajectory.snapshots[0]
    lam = lambda1(first.u.grid)
    eps = params.epsilon
    times, resid = [], []
    for s in snaps:
        times.append(s.t)
        lin = linear_v_flow(first.u, first.v, s.t, tau)
        resid.append(w1p_seminorm(s.v - lin, params.theta))
    env = eps**2 * np.exp(-lam * np.asarray(times) / params.r) + eps
    return _fit(times, resid, env, eps)


def plateau_flags(values: Sequence[float], times: Sequence[float]) -> bool:
    """Plateau verdict for a single time series (see :func:`bounds_ledger`)."""
    times = np.asarray(times, dtype=float)
    running = np.maximum.accumulate(np.asarray(values, dtype=float))
    half_idx = max(int(np.searchsorted(times, 0.5 * times[-1], side="right")) - 1, 0)
    return _plateau(float(running[-1]), float(running[half_idx]))


__all__ = [
    "CSV_FIELDS",
    "DiagnosticsRecord",
    "energy_w",
    "dissipation",
    "v_l1_exact",
    "bounds_ledger",
    "BoundsReport",
    "energy_monotone",
    "DecayCheckParams",
    "DecayFit",
    "decay_check_u",
    "decay_check_v",
    "linear_v_flow",
    "theta_upper_bound",
    "plateau_flags",
    "make_record",
]
