"""Backend selection for the face-loop kernels.

The compiled Cython module is used when it was built; otherwise (or when
``KSFORCED_PURE_PYTHON=1`` is set) the numpy implementation is used. Both
expose the same functions, all taking C-contiguous float64 arrays of shape
``(nx, ny)``.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("KSFORCED_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

upwind_flux = _impl.upwind_flux
divergence = _impl.divergence
chemotaxis_divergence = _impl.chemotaxis_divergence
max_face_gradient = _impl.max_face_gradient
face_dissipation = _impl.face_dissipation
face_gradient_sq = _impl.face_gradient_sq


def available_backends():
    """Map backend name -> kernel module for every backend importable here."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as compiled
    except ImportError:
        return out
    out["cython"] = compiled
    return out
