"""Fixed-step classical Runge-Kutta for ``psi'' = (V(x) - z) psi``."""
from __future__ import annotations

import numpy as np


def rk4_schrodinger(V, z: complex, x0: float, x1: float, Y0: np.ndarray, steps: int) -> np.ndarray:
    """Propagate ``Y = (psi, psi')`` from ``x0`` to ``x1``.

    ``Y0`` may hold several solutions as columns (shape ``(2, p)``).  ``V`` is
    a vectorized callable; it is sampled once at all stage abscissae.
    """
    Y = np.array(Y0, dtype=np.complex128)
    h = (x1 - x0) / steps
    xs = x0 + h * np.arange(steps + 1)
    q_nodes = np.asarray(V(xs), dtype=np.complex128) - z
    q_mid = np.asarray(V(xs[:-1] + h / 2), dtype=np.complex128) - z

    def rhs(y, q):
        return np.array([y[1], q * y[0]])

    for j in range(steps):
        k1 = rhs(Y, q_nodes[j])
        k2 = rhs(Y + h / 2 * k1, q_mid[j])
        k3 = rhs(Y + h / 2 * k2, q_mid[j])
        k4 = rhs(Y + h * k3, q_nodes[j + 1])
        Y = Y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Y
