"""Discrete Neumann Laplacian and the conservative chemotactic flux.

Every operator here is written in flux form over cell faces with the two
boundary faces held at zero, so discrete integrals of the outputs telescope
to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeError
from .grid import Grid2D, ScalarField, same_grid


@dataclass(frozen=True, eq=False)
class FluxPair:
    """Face fluxes: ``fx`` has shape ``(nx+1, ny)``, ``fy`` has shape ``(nx, ny+1)``."""

    grid: Grid2D
    fx: np.ndarray
    fy: np.ndarray

    def __post_init__(self):
        g = self.grid
        fx = np.ascontiguousarray(self.fx, dtype=np.float64)
        fy = np.ascontiguousarray(self.fy, dtype=np.float64)
        if fx.shape != (g.nx + 1, g.ny) or fy.shape != (g.nx, g.ny + 1):
            raise ShapeError(f"flux shapes {fx.shape}, {fy.shape} do not fit grid {g.shape}")
        object.__setattr__(self, "fx", fx)
        object.__setattr__(self, "fy", fy)

    def boundary_is_zero(self) -> bool:
        return not (
            np.any(self.fx[0]) or np.any(self.fx[-1]) or np.any(self.fy[:, 0]) or np.any(self.fy[:, -1])
        )


def laplacian_array(a: np.ndarray, dx: float, dy: float) -> np.ndarray:
    p = np.pad(a, 1, mode="edge")
    return (p[2:, 1:-1] - 2.0 * a + p[:-2, 1:-1]) / dx**2 + (p[1:-1, 2:] - 2.0 * a + p[1:-1, :-2]) / dy**2


def laplacian_neumann(field: ScalarField) -> ScalarField:
    """Five-point Laplacian with reflected ghost cells."""
    g = field.grid
    return ScalarField(g, laplacian_array(field.values, g.dx, g.dy))


def chemotactic_flux(u: ScalarField, v: ScalarField) -> FluxPair:
    """Donor-cell flux ``u * grad v`` on interior faces.

    The face gradient is the difference of ``v`` across the face; ``u`` is
    taken from the cell the flux leaves.
    """
    g = same_grid(u, v)
    fx, fy = kernels.upwind_flux(u.values, v.values, g.dx, g.dy)
    return FluxPair(g, fx, fy)


def flux_divergence(flux: FluxPair) -> ScalarField:
    g = flux.grid
    return ScalarField(g, kernels.divergence(flux.fx, flux.fy, g.dx, g.dy))
