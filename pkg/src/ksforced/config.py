"""Experiment configuration: flat ``key = value`` files with dotted sections.

Example::

    kind = run
    grid.nx = 128
    solver.tau = 1.0
    solver.t_end = 5
    initial.u0 = gaussian
    initial.u0.mass = 6.0
    forcing.mode = constant-in-time
    forcing.base = constant
    forcing.base.value = 0.5

Blank lines and ``#`` comments are ignored. Every key must be known; values
are validated at parse time and errors name the offending key path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .diagnostics import DecayCheckParams
from .errors import ConfigError, ParameterError
from .grid import Grid2D, ScalarField
from .solver import ForcingSpec, Modulation, SolverConfig

KINDS = ("run", "mass-sweep", "small-data", "verify-inequalities", "verify-semigroup")
PROFILE_KINDS = ("gaussian", "constant", "mode-perturbed")


# --- typed sections ---------------------------------------------------------------


@dataclass(frozen=True)
class ProfileSpec:
    """A nonnegative initial or forcing profile.

    ``gaussian``: ``exp(-|x - center|^2 / (2 width^2))`` rescaled so its discrete
    integral equals ``mass``; ``constant``: ``value``;
    ``mode-perturbed``: ``base * (1 + amplitude cos(j pi x/lx) cos(k pi y/ly))``
    with ``|amplitude| <= 1``. ``center = None`` means the domain center.
    """

    kind: str = "constant"
    center: tuple[float, float] | None = None
    width: float = 0.05
    mass: float = 1.0
    value: float = 0.0
    base: float = 1.0
    mode: tuple[int, int] = (1, 0)
    amplitude: float = 0.5

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ParameterError(f"profile kind must be one of {PROFILE_KINDS}, got {self.kind!r}", "kind")
        if not self.width > 0:
            raise ParameterError("width must be positive", "width")
        if not self.mass >= 0:
            raise ParameterError("mass must be >= 0", "mass")
        if not self.value >= 0:
            raise ParameterError("value must be >= 0", "value")
        if not self.base >= 0:
            raise ParameterError("base must be >= 0", "base")
        if not abs(self.amplitude) <= 1:
            raise ParameterError("amplitude must satisfy |amplitude| <= 1", "amplitude")
        if min(self.mode) < 0:
            raise ParameterError("mode indices must be >= 0", "mode")

    def build(self, grid: Grid2D) -> ScalarField:
        if self.kind == "constant":
            return ScalarField.constant(grid, self.value)
        X, Y = grid.mesh()
        if self.kind == "gaussian":
            cx, cy = self.center if self.center is not None else (0.5 * grid.lx, 0.5 * grid.ly)
            prof = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2.0 * self.width**2))
            return ScalarField(grid, prof * (self.mass / (float(np.sum(prof)) * grid.cell_area)))
        j, k = self.mode
        shape = np.cos(j * np.pi * X / grid.lx) * np.cos(k * np.pi * Y / grid.ly)
        return ScalarField(grid, self.base * (1.0 + self.amplitude * shape))


@dataclass(frozen=True)
class InitialSpec:
    u0: ProfileSpec = field(default_factory=lambda: ProfileSpec("gaussian", mass=0.9 * 4 * math.pi))
    v0: ProfileSpec = field(default_factory=ProfileSpec)


@dataclass(frozen=True)
class ForcingConfig:
    mode: str = "zero"
    base: ProfileSpec = field(default_factory=lambda: ProfileSpec("constant", value=1.0))
    modulation: Modulation = field(default_factory=Modulation)

    def build(self, grid: Grid2D) -> ForcingSpec:
        if self.mode == "zero":
            return ForcingSpec.zero()
        base = self.base.build(grid)
        if self.mode == "constant-in-time":
            return ForcingSpec.constant(base)
        return ForcingSpec.time_dependent(base, self.modulation)


@dataclass(frozen=True)
class SweepConfig:
    """Masses are given in units of 4 pi."""

    masses: tuple[float, ...] = (0.5, 0.9, 1.5, 3.0)
    width: float = 0.05
    center: tuple[float, float] | None = None


@dataclass(frozen=True)
class DecayConfig:
    params: DecayCheckParams = field(default_factory=DecayCheckParams)
    compare_half: bool = True


@dataclass(frozen=True)
class IneqConfig:
    young_count: int = 100_000
    malpha_count: int = 10_000
    field_count: int = 500
    band: int = 16
    decay: float = 1.5
    amplitude: float = 8.0
    biler_p: tuple[float, ...] = (2.0, 3.0, 4.0)
    biler_eps: tuple[float, ...] = (1.0, 0.1)
    grids: tuple[int, ...] = (64, 128)
    tolerance: float = 0.2


@dataclass(frozen=True)
class SemigroupConfig:
    count: int = 20
    lambda_grids: tuple[int, ...] = (32, 64, 128)
    conv_alpha: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75)
    conv_beta: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75)
    conv_rates: tuple[tuple[float, float], ...] = ((2.0, 1.0), (1.0, 2.0))
    conv_times: tuple[float, ...] = (0.1, 1.0, 10.0, 50.0)
    tolerance: float = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    """``kind = None`` means the config does not pin an experiment type."""

    kind: str | None = None
    grid: Grid2D = field(default_factory=lambda: Grid2D(128, 128))
    solver: SolverConfig = field(default_factory=SolverConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    initial: InitialSpec = field(default_factory=InitialSpec)
    output_dir: Path = Path("out")
    seed: int = 0
    threads: int = 1
    sweep: SweepConfig = field(default_factory=SweepConfig)
    decay: DecayConfig = field(default_factory=DecayConfig)
    ineq: IneqConfig = field(default_factory=IneqConfig)
    semigroup: SemigroupConfig = field(default_factory=SemigroupConfig)


# --- value converters -------------------------------------------------------------


def _float(s: str) -> float:
    x = float(s)
    if math.isnan(x):
        raise ValueError("NaN is not allowed")
    return x


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        pass
    x = float(s)  # accepts "1e3"
    if x != int(x):
        raise ValueError(f"{s!r} is not an integer")
    return int(x)


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _list(conv: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(s: str) -> tuple:
        items = [x.strip() for x in s.split(",")]
        if items == [""]:
            return ()
        return tuple(conv(x) for x in items)

    return parse


def _pair(conv: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(s: str) -> tuple:
        items = _list(conv)(s)
        if len(items) != 2:
            raise ValueError(f"expected two comma-separated values, got {s!r}")
        return items

    return parse


def _choice(*options: str) -> Callable[[str], str]:
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {s!r}")
        return s

    return parse


def _rate_pairs(s: str) -> tuple:
    # "2:1, 1:2"
    out = []
    for item in s.split(","):
        a, _, b = item.strip().partition(":")
        if not b:
            raise ValueError(f"expected gamma:delta pairs, got {item.strip()!r}")
        out.append((_float(a), _float(b)))
    return tuple(out)


def _profile_keys(prefix: str) -> dict[str, Callable]:
    return {
        prefix: _choice(*PROFILE_KINDS),
        f"{prefix}.center": _pair(_float),
        f"{prefix}.width": _float,
        f"{prefix}.mass": _float,
        f"{prefix}.value": _float,
        f"{prefix}.base": _float,
        f"{prefix}.mode": _pair(_int),
        f"{prefix}.amplitude": _float,
    }


SCHEMA: dict[str, Callable[[str], Any]] = {
    "kind": _choice(*KINDS),
    "output_dir": str,
    "seed": _int,
    "threads": _int,
    "grid.nx": _int,
    "grid.ny": _int,
    "grid.lx": _float,
    "grid.ly": _float,
    **{f"solver.{f.name}": (_bool if f.name == "chemotaxis" else _float) for f in fields(SolverConfig)},
    "forcing.mode": _choice("zero", "constant-in-time", "time-dependent"),
    **_profile_keys("forcing.base"),
    "forcing.modulation": _choice("identity", "exponential-decay", "sinusoidal"),
    "forcing.rate": _float,
    "forcing.amplitude": _float,
    "forcing.period": _float,
    **_profile_keys("initial.u0"),
    **_profile_keys("initial.v0"),
    "sweep.masses": _list(_float),
    "sweep.width": _float,
    "sweep.center": _pair(_float),
    "decay.theta": _float,
    "decay.delta0": _float,
    "decay.r": _float,
    "decay.n": _int,
    "decay.epsilon": _float,
    "decay.compare_half": _bool,
    "ineq.young_count": _int,
    "ineq.malpha_count": _int,
    "ineq.field_count": _int,
    "ineq.band": _int,
    "ineq.decay": _float,
    "ineq.amplitude": _float,
    "ineq.biler_p": _list(_float),
    "ineq.biler_eps": _list(_float),
    "ineq.grids": _list(_int),
    "ineq.tolerance": _float,
    "semigroup.count": _int,
    "semigroup.lambda_grids": _list(_int),
    "semigroup.conv_alpha": _list(_float),
    "semigroup.conv_beta": _list(_float),
    "semigroup.conv_rates": _rate_pairs,
    "semigroup.conv_times": _list(_float),
    "semigroup.tolerance": _float,
}


# --- parsing ----------------------------------------------------------------------


def read_pairs(text: str, source: str = "<string>") -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw.strip()!r}")
        if key in pairs:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        pairs[key] = value
    return pairs


def _convert(pairs: dict[str, str]) -> dict[str, Any]:
    out = {}
    for key, raw in pairs.items():
        conv = SCHEMA.get(key)
        if conv is None:
            raise ConfigError(key, "unknown key")
        try:
            out[key] = conv(raw)
        except ValueError as exc:
            raise ConfigError(key, f"bad value {raw!r}: {exc}") from None
    return out


def _section(values: dict[str, Any], prefix: str) -> dict[str, Any]:
    p = prefix + "."
    return {k[len(p):]: v for k, v in values.items() if k.startswith(p) and "." not in k[len(p):]}


def _build(prefix: str, factory, kwargs: dict[str, Any]):
    try:
        return factory(**kwargs)
    except ParameterError as exc:
        key = f"{prefix}.{exc.field}" if exc.field else prefix
        raise ConfigError(key, str(exc)) from None


def _profile(values: dict[str, Any], prefix: str, default: ProfileSpec) -> ProfileSpec:
    kw = _section(values, prefix)
    if prefix in values:
        kw["kind"] = values[prefix]
    return _build(prefix, lambda **k: replace(default, **k), kw)


def _positive_int(values, key, default, minimum=1):
    x = values.get(key, default)
    if x < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {x}")
    return x


def parse_text(text: str, source: str = "<string>") -> ExperimentConfig:
    values = _convert(read_pairs(text, source))
    grid = _build("grid", Grid2D, {"nx": 128, "ny": 128, **_section(values, "grid")})
    solver = _build("solver", SolverConfig, _section(values, "solver"))

    fsec = _section(values, "forcing")
    mod_kw = {k: fsec[k] for k in ("rate", "amplitude", "period") if k in fsec}
    if "modulation" in fsec:
        mod_kw["kind"] = fsec["modulation"]
    modulation = _build("forcing", Modulation, mod_kw)
    forcing = ForcingConfig(
        mode=fsec.get("mode", "zero"),
        base=_profile(values, "forcing.base", ForcingConfig().base),
        modulation=modulation,
    )
    if forcing.mode == "constant-in-time" and modulation.kind != "identity":
        raise ConfigError("forcing.modulation", "constant-in-time forcing takes the identity modulation")
    if forcing.mode == "time-dependent" and "modulation" not in fsec:
        raise ConfigError("forcing.modulation", "time-dependent forcing needs a modulation")

    init_default = InitialSpec()
    initial = InitialSpec(
        _profile(values, "initial.u0", init_default.u0),
        _profile(values, "initial.v0", init_default.v0),
    )

    ssec = _section(values, "sweep")
    for i, m in enumerate(ssec.get("masses", ())):
        if not m > 0:
            raise ConfigError("sweep.masses", f"entry {i} must be positive, got {m}")
    if "width" in ssec and not ssec["width"] > 0:
        raise ConfigError("sweep.width", "must be positive")
    sweep = SweepConfig(**ssec)

    dsec = _section(values, "decay")
    compare_half = dsec.pop("compare_half", True)
    dsec.setdefault("theta", solver.theta)
    decay = DecayConfig(_build("decay", DecayCheckParams, dsec), compare_half)

    isec = _section(values, "ineq")
    for key in ("young_count", "malpha_count", "field_count", "band"):
        if key in isec:
            _positive_int(values, f"ineq.{key}", 1)
    for p in isec.get("biler_p", ()):
        if not p >= 2:
            raise ConfigError("ineq.biler_p", f"p must be >= 2, got {p}")
    for e in isec.get("biler_eps", ()):
        if not e > 0:
            raise ConfigError("ineq.biler_eps", f"eps must be positive, got {e}")
    ineq = IneqConfig(**isec)
    for n in ineq.grids:
        if n < 4 * ineq.band:
            raise ConfigError("ineq.grids", f"grid {n} is finer than 4x the band {ineq.band} allows")

    gsec = _section(values, "semigroup")
    if "count" in gsec:
        _positive_int(values, "semigroup.count", 1)
    semigroup = SemigroupConfig(**gsec)

    seed = values.get("seed", 0)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    threads = _positive_int(values, "threads", 1)

    return ExperimentConfig(
        kind=values.get("kind"),
        grid=grid,
        solver=solver,
        forcing=forcing,
        initial=initial,
        output_dir=Path(values.get("output_dir", "out")),
        seed=seed,
        threads=threads,
        sweep=sweep,
        decay=decay,
        ineq=ineq,
        semigroup=semigroup,
    )


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror or exc}") from None
    return parse_text(text, str(path))


__all__ = [
    "ExperimentConfig",
    "ProfileSpec",
    "InitialSpec",
    "ForcingConfig",
    "SweepConfig",
    "DecayConfig",
    "IneqConfig",
    "SemigroupConfig",
    "parse_config",
    "parse_text",
]
