"""Uniform cell-centered meshes on rectangles, fields, quadrature and norms.

A :class:`ScalarField` stores its values as a C-contiguous ``(nx, ny)`` array
indexed ``values[i, j]`` with ``i`` along x, so the flat row-major layout is
``values.ravel()[i * ny + j]``. All Neumann conventions use reflected ghost
cells: the normal difference across a boundary face is zero.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, QuadratureError, ShapeError, SnapshotFormatError


@dataclass(frozen=True)
class Grid2D:
    """Uniform ``nx`` by ``ny`` cell grid on ``[0, lx] x [0, ly]``."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n:
                raise ParameterError(f"{name} must be an integer, got {n}", name)
            if n < 4:
                raise ParameterError(f"grid needs {name} >= 4, got {n}", name)
        for name in ("lx", "ly"):
            length = getattr(self, name)
            if not (length > 0 and math.isfinite(length)):
                raise ParameterError(f"domain length {name} must be positive and finite, got {length}", name)
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """1D arrays of cell-center coordinates along x and y."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return x, y

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` coordinate arrays of shape ``(nx, ny)``."""
        x, y = self.centers()
        return np.meshgrid(x, y, indexing="ij")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Cell-centered values on a grid.

    Treated as immutable: the stored array is a read-only view. Non-finite
    entries are rejected unless ``blowup_witness`` is set.
    """

    grid: Grid2D
    values: np.ndarray
    blowup_witness: bool = field(default=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        if arr.ndim == 1 and arr.size == self.grid.nx * self.grid.ny:
            arr = arr.reshape(self.grid.shape)
        if arr.shape != self.grid.shape:
            raise ShapeError(f"values of shape {arr.shape} do not fit grid {self.grid.shape}")
        if not self.blowup_witness and not np.all(np.isfinite(arr)):
            raise QuadratureError("field has non-finite entries")
        arr = arr.view()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def constant(cls, grid: Grid2D, value: float) -> ScalarField:
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> ScalarField:
        """Sample ``func(X, Y)`` at the cell centers."""
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(np.asarray(func(X, Y), dtype=float), grid.shape))

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ShapeError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


def same_grid(*fields: ScalarField) -> Grid2D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ShapeError("fields live on different grids")
    return grid


def integrate(field: ScalarField) -> float:
    """Midpoint rule: sum of values times the cell area."""
    vals = field.values
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("cannot integrate a field with non-finite entries")
    return float(np.sum(vals)) * field.grid.cell_area


def _lp(arr: np.ndarray, p: float, cell_area: float) -> float:
    a = np.abs(arr)
    if math.isinf(p):
        return float(np.max(a))
    scale = float(np.max(a))
    if scale == 0.0:
        return 0.0
    if p == 1.0:
        return float(np.sum(a)) * cell_area
    if p == 2.0:
        return math.sqrt(float(np.sum(a * a)) * cell_area)
    return scale * (float(np.sum((a / scale) ** p)) * cell_area) ** (1.0 / p)


def _check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ParameterError(f"Lp exponent must satisfy p >= 1, got {p}")
    return p


def lp_norm(field: ScalarField, p: float) -> float:
    """Discrete L^p norm (``p = inf`` gives the max norm)."""
    p = _check_p(p)
    return _lp(field.values, p, field.grid.cell_area)


def face_differences(values: np.ndarray, dx: float, dy: float) -> tuple[np.ndarray, np.ndarray]:
    """Normal differences across interior faces: shapes ``(nx-1, ny)`` and ``(nx, ny-1)``."""
    return (values[1:, :] - values[:-1, :]) / dx, (values[:, 1:] - values[:, :-1]) / dy


def gradient_components(values: np.ndarray, dx: float, dy: float) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centered gradient: mean of the two adjacent face differences.

    Boundary faces carry a zero difference (reflected ghost cell).
    """
    gfx, gfy = face_differences(values, dx, dy)
    gx = np.zeros_like(values)
    gy = np.zeros_like(values)
    gx[:-1, :] += gfx
    gx[1:, :] += gfx
    gy[:, :-1] += gfy
    gy[:, 1:] += gfy
    gx *= 0.5
    gy *= 0.5
    return gx, gy


def gradient_magnitude(field: ScalarField) -> np.ndarray:
    gx, gy = gradient_components(field.values, field.grid.dx, field.grid.dy)
    return np.hypot(gx, gy)


def w1p_seminorm(field: ScalarField, p: float) -> float:
    """L^p norm of the cell-centered gradient magnitude."""
    p = _check_p(p)
    if not np.all(np.isfinite(field.values)):
        raise QuadratureError("cannot differentiate a field with non-finite entries")
    return _lp(gradient_magnitude(field), p, field.grid.cell_area)


def w1p_norm(field: ScalarField, p: float) -> float:
    """``(||F||_p^p + ||grad F||_p^p)^(1/p)``; for ``p = inf`` the max of the two."""
    a = lp_norm(field, p)
    b = w1p_seminorm(field, p)
    if math.isinf(p):
        return max(a, b)
    m = max(a, b)
    if m == 0.0:
        return 0.0
    return m * ((a / m) ** p + (b / m) ** p) ** (1.0 / p)


# --- KSF1 binary snapshots -------------------------------------------------

MAGIC = b"KSF1"
_HEADER = struct.Struct("<4sQQdd")


def write_snapshot(path, field: ScalarField) -> None:
    """Write ``field`` in the KSF1 format (little-endian header, row-major float64 body)."""
    g = field.grid
    body = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, g.nx, g.ny, g.lx, g.ly))
            fh.write(body)
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path) -> ScalarField:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, nx, ny, lx, ly = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * nx * ny
    if len(data) != expected:
        raise SnapshotFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    grid = Grid2D(nx, ny, lx, ly)
    finite = bool(np.all(np.isfinite(vals)))
    return ScalarField(grid, vals.reshape(nx, ny), blowup_witness=not finite)
