"""Pick the compiled kernels when available, the numpy ones otherwise.

Set ``SEMISEP_PURE_PYTHON=1`` to force the fallback, e.g. for parity tests.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

try:
    from . import _accel
except ImportError:  # extension not built
    _accel = None

_forced = os.environ.get("SEMISEP_PURE_PYTHON", "").strip() not in ("", "0")

#: name of the backend in use: ``"compiled"`` or ``"python"``
BACKEND = "compiled" if (_accel is not None and not _forced) else "python"


def _impl(name: str, backend: str | None):
    which = backend or BACKEND
    if which == "compiled":
        if _accel is None:
            raise RuntimeError("compiled backend requested but semisep._accel is not built")
        return getattr(_accel, name)
    if which == "python":
        return getattr(_fallback, name)
    raise ValueError(f"unknown backend {backend!r}")


def forward_sweep(C, B, F, dx, alpha, backend: str | None = None):
    """Dispatch :func:`semisep._fallback.forward_sweep` to the selected backend."""
    C = np.ascontiguousarray(C, dtype=np.complex128)
    B = np.ascontiguousarray(B, dtype=np.complex128)
    F = np.ascontiguousarray(F, dtype=np.complex128)
    dx = np.ascontiguousarray(dx, dtype=np.float64)
    return _impl("forward_sweep", backend)(C, B, F, dx, complex(alpha))


def subset_terms(a, b, P, size: int, backend: str | None = None):
    """Dispatch :func:`semisep._fallback.subset_terms` to the selected backend."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    P = np.ascontiguousarray(P, dtype=np.complex128)
    return _impl("subset_terms", backend)(a, b, P, int(size))


def compiled_available() -> bool:
    return _accel is not None
