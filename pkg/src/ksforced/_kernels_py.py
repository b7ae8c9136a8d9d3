"""Pure numpy versions of the hot face-loop kernels.

Arrays are indexed ``a[i, j]`` with ``i`` along x. Face arrays follow the
convention ``fx[i, j]`` = face between cells ``i-1`` and ``i`` (so ``fx[0]``
and ``fx[nx]`` are the boundary faces), likewise ``fy[i, j]`` along y.
"""

import numpy as np

UFLOOR = 1e-300


def upwind_flux(u, v, dx, dy):
    nx, ny = u.shape
    fx = np.zeros((nx + 1, ny))
    fy = np.zeros((nx, ny + 1))
    gx = (v[1:, :] - v[:-1, :]) / dx
    fx[1:-1, :] = np.where(gx > 0.0, u[:-1, :], u[1:, :]) * gx
    gy = (v[:, 1:] - v[:, :-1]) / dy
    fy[:, 1:-1] = np.where(gy > 0.0, u[:, :-1], u[:, 1:]) * gy
    return fx, fy


def divergence(fx, fy, dx, dy):
    return (fx[1:, :] - fx[:-1, :]) / dx + (fy[:, 1:] - fy[:, :-1]) / dy


def chemotaxis_divergence(u, v, dx, dy):
    fx, fy = upwind_flux(u, v, dx, dy)
    return divergence(fx, fy, dx, dy)


def max_face_gradient(v, dx, dy):
    gmax = 0.0
    if v.shape[0] > 1:
        gmax = max(gmax, float(np.max(np.abs(v[1:, :] - v[:-1, :]))) / dx)
    if v.shape[1] > 1:
        gmax = max(gmax, float(np.max(np.abs(v[:, 1:] - v[:, :-1]))) / dy)
    return gmax


def _face_terms(ua, ub, va, vb, h):
    dv = (vb - va) / h
    du = (ub - ua) / h
    up = np.where(dv > 0.0, ua, ub)
    ok = (ua > UFLOOR) & (ub > UFLOOR)
    la = np.log(np.where(ok, ua, 1.0))
    lb = np.log(np.where(ok, ub, 1.0))
    term = (du - up * dv) * ((lb - la) / h - dv)
    return np.where(ok, term, 0.0)


def face_dissipation(u, v, dx, dy):
    """Sum over interior faces of (grad u - u_up grad v) * grad(log u - v).

    Faces touching a cell with u <= 1e-300 contribute nothing. The caller
    multiplies by the cell area.
    """
    sx = _face_terms(u[:-1, :], u[1:, :], v[:-1, :], v[1:, :], dx)
    sy = _face_terms(u[:, :-1], u[:, 1:], v[:, :-1], v[:, 1:], dy)
    return float(np.sum(sx) + np.sum(sy))


def face_gradient_sq(v, dx, dy):
    """Sum of squared face differences (the discrete Dirichlet form, no area)."""
    gx = (v[1:, :] - v[:-1, :]) / dx
    gy = (v[:, 1:] - v[:, :-1]) / dy
    return float(np.sum(gx * gx) + np.sum(gy * gy))
