"""The batch experiments behind the CLI: single runs, the critical-mass sweep,
the small-data decay experiment, and the inequality and semigroup audits.

Every function here is deterministic given its config (random fields come
from per-sample streams of the config seed), and results are returned in a
fixed order regardless of how many worker threads were used.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .config import ExperimentConfig, ProfileSpec
from .diagnostics import (
    LEDGER_OBSERVABLES,
    DecayFit,
    bounds_ledger,
    decay_check_u,
    decay_check_v,
    energy_monotone,
)
from .errors import ConfigError, KSError
from .grid import Grid2D, ScalarField, integrate, lp_norm, w1p_seminorm
from .inequalities import (
    FieldSampler,
    InequalityReport,
    biler_check,
    malpha_audit,
    refinement_change,
    trudinger_moser_check,
    young_audit,
)
from .semigroup import (
    SemigroupParams,
    convolution_bound_check,
    convolution_integral,
    heat_semigroup,
    lambda1,
)
from .solver import ForcingSpec, State, Trajectory, run

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi


def _map(func, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


# --- single run -------------------------------------------------------------------


def initial_state(cfg: ExperimentConfig) -> State:
    return State(cfg.initial.u0.build(cfg.grid), cfg.initial.v0.build(cfg.grid))


def run_experiment(cfg: ExperimentConfig) -> Trajectory:
    return run(initial_state(cfg), cfg.solver, cfg.forcing.build(cfg.grid))


# --- critical-mass sweep ------------------------------------------------------------

SWEEP_HEADER = (
    "mass_over_4pi",
    "mass",
    "status",
    "t_detect",
    "steps",
    "final_w",
    "energy_monotone",
    "all_plateau",
    *(f"plateau_{name}" for name, _ in LEDGER_OBSERVABLES),
    "max_u_linf",
    "error",
)


@dataclass(frozen=True)
class SweepRow:
    mass_over_4pi: float
    mass: float
    status: str
    t_detect: float | None = None
    steps: int = 0
    final_w: float | None = None
    energy_monotone: bool | None = None
    plateau: tuple[tuple[str, bool], ...] = ()
    max_u_linf: float | None = None
    error: str = ""

    @property
    def all_plateau(self) -> bool | None:
        return all(ok for _, ok in self.plateau) if self.plateau else None

    def values(self) -> tuple:
        flags = dict(self.plateau)
        return (
            self.mass_over_4pi,
            self.mass,
            self.status,
            self.t_detect,
            self.steps,
            self.final_w,
            self.energy_monotone,
            self.all_plateau,
            *(flags.get(name) for name, _ in LEDGER_OBSERVABLES),
            self.max_u_linf,
            self.error,
        )


def sweep_initial(cfg: ExperimentConfig, mass: float) -> State:
    u0 = ProfileSpec("gaussian", center=cfg.sweep.center, width=cfg.sweep.width, mass=mass).build(cfg.grid)
    return State(u0, cfg.initial.v0.build(cfg.grid))


def _sweep_one(cfg: ExperimentConfig, forcing: ForcingSpec, m4: float) -> SweepRow:
    mass = m4 * FOUR_PI
    try:
        traj = run(sweep_initial(cfg, mass), cfg.solver, forcing)
        rep = bounds_ledger(traj)
        mono, _ = energy_monotone(traj)
        return SweepRow(
            mass_over_4pi=m4,
            mass=mass,
            status=traj.status,
            t_detect=traj.t_detect,
            steps=len(traj.dts),
            final_w=traj.records[-1].energy_w,
            energy_monotone=mono,
            plateau=tuple((e.name, e.plateau) for e in rep.entries),
            max_u_linf=max(r.u_linf for r in traj.records),
        )
    except KSError as exc:
        log.warning("sweep row m=%g*4pi failed: %s", m4, exc)
        return SweepRow(m4, mass, "error", error=str(exc))


def mass_sweep(cfg: ExperimentConfig, threads: int | None = None) -> list[SweepRow]:
    """One solver run per configured mass (in units of 4 pi), centered Gaussian u0.

    Rows come back in the configured order; a failing row is recorded and the
    sweep continues.
    """
    forcing = cfg.forcing.build(cfg.grid)
    if not forcing.is_constant_in_time:
        raise ConfigError("forcing.mode", "the mass sweep needs forcing constant in time")
    masses = list(cfg.sweep.masses)
    return _map(lambda m4: _sweep_one(cfg, forcing, m4), masses, threads or cfg.threads)


# --- small-data experiment ----------------------------------------------------------


@dataclass(frozen=True)
class SmallDataReport:
    epsilon: float
    status: str
    t_detect: float | None
    fit_u: DecayFit | None
    fit_v: DecayFit | None
    norms: tuple[float, float, float]  # ||u0||_q0, ||grad v0||_theta, sup_t ||f||_q0

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def _scaled(field: ScalarField, norm: float, eps: float, key: str) -> ScalarField:
    if eps == 0.0:
        return ScalarField.constant(field.grid, 0.0)
    if norm == 0.0:
        raise ConfigError(key, "profile has zero norm and cannot be scaled to epsilon")
    return field * (eps / norm)


def small_data_setup(cfg: ExperimentConfig, eps: float) -> tuple[State, ForcingSpec]:
    """Initial data and forcing scaled so the three smallness norms equal ``eps``."""
    p = cfg.decay.params
    q0, theta = p.q0, p.theta
    g = cfg.grid
    u_shape = cfg.initial.u0.build(g)
    v_shape = cfg.initial.v0.build(g)
    u0 = _scaled(u_shape, lp_norm(u_shape, q0), eps, "initial.u0")
    v0 = _scaled(v_shape, w1p_seminorm(v_shape, theta), eps, "initial.v0")
    fc = cfg.forcing
    if fc.mode == "zero":
        forcing = ForcingSpec.zero()
    else:
        base_shape = fc.base.build(g)
        base = _scaled(base_shape, lp_norm(base_shape, q0) * fc.modulation.sup, eps, "forcing.base")
        if fc.mode == "constant-in-time":
            forcing = ForcingSpec.constant(base)
        else:
            forcing = ForcingSpec.time_dependent(base, fc.modulation)
    return State(u0, v0), forcing


def small_data_experiment(cfg: ExperimentConfig, epsilon: float | None = None) -> tuple[SmallDataReport, Trajectory]:
    eps = cfg.decay.params.epsilon if epsilon is None else float(epsilon)
    if cfg.solver.t_end < 10:
        raise ConfigError("solver.t_end", f"the small-data experiment runs to t_end >= 10, got {cfg.solver.t_end}")
    params = replace(cfg.decay.params, epsilon=eps)
    state, forcing = small_data_setup(cfg, eps)
    traj = run(state, cfg.solver, forcing)
    sup_f = 0.0 if forcing.mode == "zero" else lp_norm(forcing.base, params.q0) * forcing.modulation.sup
    norms = (lp_norm(state.u, params.q0), w1p_seminorm(state.v, params.theta), sup_f)
    if traj.blew_up:
        log.warning("small-data run blew up at t=%s (epsilon=%g)", traj.t_detect, eps)
        return SmallDataReport(eps, traj.status, traj.t_detect, None, None, norms), traj
    fit_u = decay_check_u(traj, params)
    fit_v = decay_check_v(traj, params, cfg.solver.tau)
    return SmallDataReport(eps, traj.status, traj.t_detect, fit_u, fit_v, norms), traj


def fit_ratio(a: float, b: float) -> float:
    """Symmetric ratio ``max(a, b) / min(a, b)``; 1 when both vanish."""
    lo, hi = sorted((abs(a), abs(b)))
    if hi == 0.0:
        return 1.0
    return math.inf if lo == 0.0 else hi / lo


# --- inequality audits -------------------------------------------------------------

INEQ_HEADER = ("name", "samples", "worst_ratio", "violated")
STABILITY_HEADER = ("name", "grid", "fitted_c", "relative_change", "stable")


@dataclass(frozen=True)
class IneqResults:
    reports: list[InequalityReport]
    stability: list[tuple]  # rows of STABILITY_HEADER

    @property
    def passed(self) -> bool:
        return not any(r.violated for r in self.reports) and all(row[-1] is not False for row in self.stability)


def verify_inequalities(cfg: ExperimentConfig, threads: int | None = None) -> IneqResults:
    ic = cfg.ineq
    reports = [young_audit(ic.young_count, cfg.seed), malpha_audit(ic.malpha_count, cfg.seed)]

    def family(n: int) -> list[InequalityReport]:
        grid = Grid2D(n, n, cfg.grid.lx, cfg.grid.ly)
        sampler = FieldSampler(grid, cfg.seed, ic.band, ic.decay, ic.amplitude)
        out = [trudinger_moser_check(sampler, ic.field_count)]
        out += [biler_check(sampler, p, e, ic.field_count) for p in ic.biler_p for e in ic.biler_eps]
        return out

    per_grid = _map(family, list(ic.grids), threads or cfg.threads)
    stability = []
    for gi, (n, reps) in enumerate(zip(ic.grids, per_grid)):
        for k, rep in enumerate(reps):
            if gi == 0:
                stability.append((rep.name, n, rep.worst_ratio, None, None))
            else:
                change = refinement_change(per_grid[gi - 1][k], rep)
                stability.append((rep.name, n, rep.worst_ratio, change, change <= ic.tolerance))
    reports += per_grid[-1] if per_grid else []
    return IneqResults(reports, stability)


# --- semigroup audits -------------------------------------------------------------

CHECK_HEADER = ("check", "value", "threshold", "passed")


def _random_fields(grid: Grid2D, seed: int, count: int) -> list[np.ndarray]:
    streams = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s).standard_normal(grid.shape) for s in streams]


def semigroup_checks(cfg: ExperimentConfig) -> list[tuple]:
    """Rows of CHECK_HEADER: exactness of the discrete heat semigroup, the
    convergence of lambda1 on [0, pi]^2 and the convolution-integral bound."""
    sc = cfg.semigroup
    grid = cfg.grid
    tol = sc.tolerance
    rows = []
    lam = lambda1(grid)
    w_semi = w_mass = 0.0
    w_max = w_decay = -math.inf
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(sc.count + 1)[-1])
    for arr in _random_fields(grid, cfg.seed, sc.count):
        w = ScalarField(grid, arr)
        t, s = rng.uniform(1e-4, 0.05, 2)
        a = heat_semigroup(w, t + s)
        b = heat_semigroup(heat_semigroup(w, s), t)
        w_semi = max(w_semi, lp_norm(a - b, math.inf) / lp_norm(w, math.inf))
        w_mass = max(w_mass, abs(integrate(a) - integrate(w)) / lp_norm(w, 1.0))
        hi, lo = float(np.max(arr)), float(np.min(arr))
        span = hi - lo
        w_max = max(w_max, (float(np.max(a.values)) - hi) / span, (lo - float(np.min(a.values))) / span)
        w0 = w - integrate(w) / grid.area
        d = lp_norm(heat_semigroup(w0, t), 2.0) / (math.exp(-lam * t) * lp_norm(w0, 2.0)) - 1.0
        w_decay = max(w_decay, d)
    rows += [
        ("semigroup_property", w_semi, tol, w_semi <= tol),
        ("mass_invariance", w_mass, tol, w_mass <= tol),
        ("maximum_principle", w_max, tol, w_max <= tol),
        ("zero_mean_decay", w_decay, tol, w_decay <= tol),
    ]

    errs = [abs(lambda1(Grid2D(n, n, math.pi, math.pi)) - 1.0) for n in sc.lambda_grids]
    for n, e in zip(sc.lambda_grids, errs):
        rows.append((f"lambda1_error_n{n}", e, None, None))
    for (n1, e1), (n2, e2) in zip(zip(sc.lambda_grids, errs), zip(sc.lambda_grids[1:], errs[1:])):
        order = math.log(e1 / e2) / math.log(n2 / n1)
        rows.append((f"lambda1_order_n{n1}_n{n2}", order, 2.0, abs(order - 2.0) <= 0.1))

    worst = 0.0
    for alpha in sc.conv_alpha:
        for beta in sc.conv_beta:
            for gamma, delta in sc.conv_rates:
                worst = max(worst, convolution_bound_check(SemigroupParams(alpha, beta, gamma, delta), sc.conv_times))
    rows.append(("convolution_constant", worst, 1e3, worst < 1e3))
    closed = 4.0 * (math.exp(-1.0) - math.exp(-2.0))
    err = abs(convolution_integral(SemigroupParams(0.0, 0.0, 2.0, 1.0), 1.0) - closed)
    rows.append(("convolution_closed_form", err, 1e-8, err <= 1e-8))
    return rows


__all__ = [
    "FOUR_PI",
    "initial_state",
    "run_experiment",
    "SweepRow",
    "SWEEP_HEADER",
    "sweep_initial",
    "mass_sweep",
    "SmallDataReport",
    "small_data_setup",
    "small_data_experiment",
    "fit_ratio",
    "IneqResults",
    "INEQ_HEADER",
    "STABILITY_HEADER",
    "verify_inequalities",
    "CHECK_HEADER",
    "semigroup_checks",
]
