"""IMEX time stepping for the forced Keller-Segel system

    u_t = Delta u - div(u grad v),    tau v_t = Delta v - v + u + f,

with homogeneous Neumann conditions on a rectangle. Each step advects u
explicitly with donor-cell fluxes, then applies the implicit-Euler resolvents
of the diffusion (for u) and of ``(Delta - 1)/tau`` (for v, using the new u)
exactly in the cosine basis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .diagnostics import DiagnosticsRecord, make_record, v_l1_exact
from .errors import ParameterError, TimeStepUnderflow
from .grid import Grid2D, ScalarField, integrate, lp_norm, same_grid, w1p_norm
from .semigroup import dct2, eigenvalues, idct2

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class State:
    u: ScalarField
    v: ScalarField
    t: float = 0.0

    def __post_init__(self):
        same_grid(self.u, self.v)
        if self.t < 0:
            raise ParameterError(f"time must be >= 0, got {self.t}")

    @property
    def grid(self) -> Grid2D:
        return self.u.grid

    def is_nonnegative(self, rel_tol: float = 1e-13) -> bool:
        for fld in (self.u, self.v):
            a = fld.values
            scale = float(np.max(np.abs(a)))
            if float(np.min(a)) < -rel_tol * scale:
                return False
        return True


# --- forcing ----------------------------------------------------------------------


@dataclass(frozen=True)
class Modulation:
    """Multiplicative time profile of the forcing.

    ``identity``: 1; ``exponential-decay``: ``exp(-rate t)``;
    ``sinusoidal``: ``1 + amplitude sin(2 pi t / period)`` with amplitude in [0, 1).
    """

    kind: str = "identity"
    rate: float = 0.0
    amplitude: float = 0.0
    period: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "exponential-decay", "sinusoidal"):
            raise ParameterError(f"unknown modulation {self.kind!r}")
        if self.kind == "exponential-decay" and not self.rate >= 0:
            raise ParameterError("decay rate must be >= 0", "rate")
        if self.kind == "sinusoidal":
            if not (0.0 <= self.amplitude < 1.0):
                raise ParameterError(f"sinusoidal amplitude must lie in [0, 1), got {self.amplitude}", "amplitude")
            if not self.period > 0:
                raise ParameterError("period must be positive", "period")

    def __call__(self, t: float) -> float:
        if self.kind == "identity":
            return 1.0
        if self.kind == "exponential-decay":
            return math.exp(-self.rate * t)
        return 1.0 + self.amplitude * math.sin(2.0 * math.pi * t / self.period)

    @property
    def sup(self) -> float:
        """Supremum over t >= 0."""
        return 1.0 + self.amplitude if self.kind == "sinusoidal" else 1.0


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    """External signal production ``f(x, t) = base(x) * modulation(t)``."""

    mode: str = "zero"
    base: ScalarField | None = None
    modulation: Modulation = field(default_factory=Modulation)

    def __post_init__(self):
        if self.mode not in ("zero", "constant-in-time", "time-dependent"):
            raise ParameterError(f"unknown forcing mode {self.mode!r}")
        if self.mode == "zero":
            return
        if self.base is None:
            raise ParameterError(f"forcing mode {self.mode!r} needs a base field")
        if float(np.min(self.base.values)) < 0:
            raise ParameterError("forcing base must be nonnegative")
        if self.mode == "constant-in-time" and self.modulation.kind != "identity":
            raise ParameterError("constant-in-time forcing takes the identity modulation")

    @classmethod
    def zero(cls) -> ForcingSpec:
        return cls("zero")

    @classmethod
    def constant(cls, base: ScalarField) -> ForcingSpec:
        return cls("constant-in-time", base)

    @classmethod
    def time_dependent(cls, base: ScalarField, modulation: Modulation) -> ForcingSpec:
        return cls("time-dependent", base, modulation)

    @property
    def is_constant_in_time(self) -> bool:
        return self.mode != "time-dependent"

    def sample_array(self, grid: Grid2D, t: float) -> np.ndarray | None:
        """Cell values at time t, or None for zero forcing."""
        if self.mode == "zero":
            return None
        if self.base.grid != grid:
            raise ParameterError("forcing base lives on a different grid")
        if self.mode == "constant-in-time":
            return self.base.values
        return self.base.values * self.modulation(t)

    def sample(self, grid: Grid2D, t: float) -> ScalarField:
        arr = self.sample_array(grid, t)
        return ScalarField(grid, np.zeros(grid.shape) if arr is None else arr)

    def l1_norm(self, t: float) -> float:
        if self.mode == "zero":
            return 0.0
        return integrate(self.base) * self.modulation(t)


# --- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    ``cfl_safety`` above 0.25 no longer guarantees a nonnegative advection
    substep on square cells.
    """

    tau: float = 1.0
    dt_init: float = 1e-3
    dt_min: float = 1e-10
    cfl_safety: float = 0.2
    t_end: float = 1.0
    blowup_sup_threshold: float = 1e9
    snapshot_interval: float = 0.1
    theta: float = 3.0
    chemotaxis: bool = True
    gradient_floor: float = 1e-12

    def __post_init__(self):
        checks = [
            ("tau", self.tau > 0),
            ("dt_init", self.dt_init > 0),
            ("dt_min", self.dt_min > 0),
            ("cfl_safety", 0 < self.cfl_safety <= 1),
            ("t_end", self.t_end > 0),
            ("blowup_sup_threshold", self.blowup_sup_threshold > 0),
            ("snapshot_interval", self.snapshot_interval > 0),
            ("theta", self.theta >= 1),
            ("gradient_floor", self.gradient_floor > 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ParameterError(f"{name} out of range: {getattr(self, name)!r}", name)
        if not self.dt_min < self.dt_init:
            raise ParameterError(f"dt_min ({self.dt_min}) must be below dt_init ({self.dt_init})", "dt_min")


# --- stepping -----------------------------------------------------------------------


class TimeStep(NamedTuple):
    dt: float
    underflow: bool
    cfl_bound: float


def adaptive_dt(state: State, cfg: SolverConfig) -> TimeStep:
    """Advective CFL step ``cfl_safety * min(dx, dy) / max|face grad v|`` clamped to [dt_min, dt_init]."""
    g = state.grid
    if cfg.chemotaxis:
        gmax = kernels.max_face_gradient(state.v.values, g.dx, g.dy)
        bound = cfg.cfl_safety * min(g.dx, g.dy) / max(gmax, cfg.gradient_floor)
    else:
        bound = math.inf
    if not bound >= cfg.dt_min:  # also catches NaN
        return TimeStep(cfg.dt_min, True, bound)
    return TimeStep(min(cfg.dt_init, bound), False, bound)


def _step_arrays(u, v, grid, tau, dt, f_arr, chemotaxis):
    mu = eigenvalues(grid)
    if chemotaxis:
        ustar = u - dt * kernels.chemotaxis_divergence(u, v, grid.dx, grid.dy)
    else:
        ustar = u
    unew = idct2(dct2(ustar) / (1.0 + dt * mu))
    rhs = v + (dt / tau) * unew if f_arr is None else v + (dt / tau) * (unew + f_arr)
    vnew = idct2(dct2(rhs) / (1.0 + (dt / tau) * (mu + 1.0)))
    return unew, vnew


def step(state: State, cfg: SolverConfig, f: ForcingSpec, dt: float) -> State:
    """Advance one step of size ``dt``; f is sampled at the start of the step."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if dt < cfg.dt_min:
        raise TimeStepUnderflow(f"dt={dt:.3e} below dt_min={cfg.dt_min:.3e}")
    grid = state.grid
    f_arr = f.sample_array(grid, state.t)
    unew, vnew = _step_arrays(state.u.values, state.v.values, grid, cfg.tau, dt, f_arr, cfg.chemotaxis)
    bad = not (np.all(np.isfinite(unew)) and np.all(np.isfinite(vnew)))
    return State(
        ScalarField(grid, unew, blowup_witness=bad),
        ScalarField(grid, vnew, blowup_witness=bad),
        state.t + dt,
    )


def blowup_quantity(state: State, theta: float) -> float:
    """``||u||_inf + ||v||_{W^{1,theta}}``."""
    return lp_norm(state.u, math.inf) + w1p_norm(state.v, theta)


def detect_blowup(state: State, theta: float, cfg: SolverConfig, underflow: bool = False) -> bool:
    if underflow:
        return True
    vals_ok = np.all(np.isfinite(state.u.values)) and np.all(np.isfinite(state.v.values))
    if not vals_ok:
        return True
    return blowup_quantity(state, theta) > cfg.blowup_sup_threshold


# --- driver ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Output of :func:`run`: snapshots, one diagnostics record per step, and the status."""

    snapshots: list[State]
    records: list[DiagnosticsRecord]
    dts: list[float] = field(default_factory=list)
    cfl_bounds: list[float] = field(default_factory=list)
    status: str = "completed"
    t_detect: float | None = None
    underflow: bool = False
    quality_warning: str | None = None
    final: State | None = None

    @property
    def blew_up(self) -> bool:
        return self.status == "blowup"


def run(initial: State, cfg: SolverConfig, f: ForcingSpec) -> Trajectory:
    """Integrate to ``cfg.t_end`` or until blow-up is declared.

    Snapshots are kept at every multiple of ``snapshot_interval`` (steps are
    shortened to land on them exactly), at the final time, and at the
    detection time of a blow-up.
    """
    if not initial.is_nonnegative():
        raise ParameterError("initial data must be nonnegative")
    grid = initial.grid
    tau, theta = cfg.tau, cfg.theta
    u0_l1 = lp_norm(initial.u, 1.0)
    v0_l1 = lp_norm(initial.v, 1.0)

    def record(new, old, dt, prev_energy, vt_accum):
        law = v_l1_exact(new.t, v0_l1, u0_l1, f, tau)
        return make_record(new, old, dt, f.sample_array(grid, new.t), tau, theta, law, prev_energy, vt_accum)

    rec = record(initial, None, 0.0, None, 0.0)
    traj = Trajectory([initial], [rec], final=initial)
    if rec.u_linf + rec.v_w1theta > cfg.blowup_sup_threshold:
        traj.status, traj.t_detect = "blowup", initial.t
        return traj

    state = initial
    vt_accum = 0.0
    k_snap = 1
    t_end = cfg.t_end
    while state.t < t_end - 1e-12 * max(1.0, t_end):
        ts = adaptive_dt(state, cfg)
        if ts.underflow:
            traj.status, traj.t_detect, traj.underflow = "blowup", state.t, True
            log.info("time step underflow at t=%.6g (cfl bound %.3e)", state.t, ts.cfl_bound)
            break
        target = min(k_snap * cfg.snapshot_interval, t_end)
        dt = ts.dt
        remaining = target - state.t
        landing = dt >= remaining - cfg.dt_min
        if landing:
            dt = remaining
        elif 2.0 * dt > remaining:
            dt = 0.5 * remaining  # two even steps instead of one step and a sliver
        new = step(state, cfg, f, dt)
        if landing:
            new = State(new.u, new.v, target)
        traj.dts.append(dt)
        traj.cfl_bounds.append(ts.cfl_bound)

        if new.u.blowup_witness:
            traj.status, traj.t_detect = "blowup", new.t
            traj.quality_warning = "non-finite values appeared before the blow-up threshold was crossed"
            log.warning("t=%.6g: %s", new.t, traj.quality_warning)
            traj.snapshots.append(new)
            state = new
            break

        vt = (new.v.values - state.v.values) / dt
        vt_accum += float(np.sum(vt * vt)) * grid.cell_area * dt
        rec = record(new, state, dt, traj.records[-1].energy_w, vt_accum)
        traj.records.append(rec)
        state = new
        blown = rec.u_linf + rec.v_w1theta > cfg.blowup_sup_threshold
        if landing:
            k_snap += 1
        if landing or blown:
            traj.snapshots.append(new)
        if blown:
            traj.status, traj.t_detect = "blowup", new.t
            break

    traj.final = state
    return traj
