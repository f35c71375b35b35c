"""Pure-numpy versions of the compiled kernels in ``_accel``."""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np


def forward_sweep(C, B, F, dx, alpha):
    """March ``y(x) = F(x) + alpha * C(x) * int_a^x B(s) y(s) ds`` left to right.

    Parameters
    ----------
    C : ndarray, shape (N, m, n)
    B : ndarray, shape (N, n, m)
    F : ndarray, shape (N, m, p)
    dx : ndarray, shape (N - 1,)
    alpha : complex

    Returns
    -------
    y : ndarray, shape (N, m, p)
    S : ndarray, shape (N, n, p)
        Trapezoid accumulation of ``B y`` from the left end to each node.
    """
    N, m, n = C.shape
    p = F.shape[2]
    y = np.zeros((N, m, p), dtype=np.complex128)
    S = np.zeros((N, n, p), dtype=np.complex128)
    if N == 0:
        return y, S
    # the implicit matrices do not depend on the solution, so invert them all at once
    half = 0.5 * np.asarray(dx, dtype=np.float64)
    lhs = np.eye(m, dtype=np.complex128) - (alpha * half)[:, None, None] * np.matmul(C[1:], B[1:])
    try:
        inv = np.linalg.inv(lhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular implicit step") from exc
    aC = alpha * C
    y[0] = F[0]
    BY_prev = B[0] @ y[0]
    for k in range(1, N):
        h = half[k - 1]
        Q = S[k - 1] + h * BY_prev
        y[k] = inv[k - 1] @ (F[k] + aC[k] @ Q)
        BY_prev = B[k] @ y[k]
        S[k] = Q + h * BY_prev
    return y, S


def subset_terms(a, b, P, size):
    """Products over all ``size``-subsets of ``range(N)`` in lexicographic order.

    ``term(S) = prod_{s in S} a[s] * prod_{t not in S} b[t] * prod_{s in S, t not in S} P[s, t]``
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    P = np.asarray(P, dtype=np.complex128)
    N = a.shape[0]
    out = np.empty(comb(N, size), dtype=np.complex128)
    everything = np.arange(N)
    for pos, chosen in enumerate(combinations(range(N), size)):
        mask = np.zeros(N, dtype=bool)
        mask[list(chosen)] = True
        inside = everything[mask]
        outside = everything[~mask]
        term = np.prod(a[inside]) * np.prod(b[outside])
        if inside.size and outside.size:
            term *= np.prod(P[np.ix_(inside, outside)])
        out[pos] = term
    return out
