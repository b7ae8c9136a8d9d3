# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled face-loop kernels. Same semantics as ``_kernels_py``."""

import numpy as np
from libc.math cimport fabs, log

cdef double UFLOOR = 1e-300


def upwind_flux(const double[:, ::1] u, const double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    cdef double g
    fx_arr = np.zeros((nx + 1, ny))
    fy_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] fx = fx_arr
    cdef double[:, ::1] fy = fy_arr
    for i in range(1, nx):
        for j in range(ny):
            g = (v[i, j] - v[i - 1, j]) / dx
            fx[i, j] = (u[i - 1, j] if g > 0.0 else u[i, j]) * g
    for i in range(nx):
        for j in range(1, ny):
            g = (v[i, j] - v[i, j - 1]) / dy
            fy[i, j] = (u[i, j - 1] if g > 0.0 else u[i, j]) * g
    return fx_arr, fy_arr


def divergence(const double[:, ::1] fx, const double[:, ::1] fy, double dx, double dy):
    cdef Py_ssize_t nx = fy.shape[0], ny = fx.shape[1], i, j
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    for i in range(nx):
        for j in range(ny):
            out[i, j] = (fx[i + 1, j] - fx[i, j]) / dx + (fy[i, j + 1] - fy[i, j]) / dy
    return out_arr


cdef inline double _flux(double ua, double ub, double va, double vb, double h) nogil:
    cdef double g = (vb - va) / h
    return (ua if g > 0.0 else ub) * g


def chemotaxis_divergence(const double[:, ::1] u, const double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    cdef double left, right, down, up
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(nx):
            for j in range(ny):
                left = _flux(u[i - 1, j], u[i, j], v[i - 1, j], v[i, j], dx) if i > 0 else 0.0
                right = _flux(u[i, j], u[i + 1, j], v[i, j], v[i + 1, j], dx) if i < nx - 1 else 0.0
                down = _flux(u[i, j - 1], u[i, j], v[i, j - 1], v[i, j], dy) if j > 0 else 0.0
                up = _flux(u[i, j], u[i, j + 1], v[i, j], v[i, j + 1], dy) if j < ny - 1 else 0.0
                out[i, j] = (right - left) / dx + (up - down) / dy
    return out_arr


def max_face_gradient(const double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = v.shape[0], ny = v.shape[1], i, j
    cdef double gx = 0.0, gy = 0.0, d
    with nogil:
        for i in range(1, nx):
            for j in range(ny):
                d = fabs(v[i, j] - v[i - 1, j])
                if d > gx:
                    gx = d
        for i in range(nx):
            for j in range(1, ny):
                d = fabs(v[i, j] - v[i, j - 1])
                if d > gy:
                    gy = d
    return max(gx / dx, gy / dy)


cdef inline double _face_term(double ua, double ub, double va, double vb, double h) nogil:
    cdef double dv, du, up
    if ua <= UFLOOR or ub <= UFLOOR:
        return 0.0
    dv = (vb - va) / h
    du = (ub - ua) / h
    up = ua if dv > 0.0 else ub
    return (du - up * dv) * ((log(ub) - log(ua)) / h - dv)


def face_dissipation(const double[:, ::1] u, const double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1], i, j
    cdef double sx = 0.0, sy = 0.0
    with nogil:
        for i in range(1, nx):
            for j in range(ny):
                sx += _face_term(u[i - 1, j], u[i, j], v[i - 1, j], v[i, j], dx)
        for i in range(nx):
            for j in range(1, ny):
                sy += _face_term(u[i, j - 1], u[i, j], v[i, j - 1], v[i, j], dy)
    return sx + sy


def face_gradient_sq(const double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = v.shape[0], ny = v.shape[1], i, j
    cdef double sx = 0.0, sy = 0.0, g
    with nogil:
        for i in range(1, nx):
            for j in range(ny):
                g = (v[i, j] - v[i - 1, j]) / dx
                sx += g * g
        for i in range(nx):
            for j in range(1, ny):
                g = (v[i, j] - v[i, j - 1]) / dy
                sy += g * g
    return sx + sy
