"""Dense quadrature discretization used as an independent determinant oracle.

Nothing here uses the semi-separable structure beyond evaluating the kernel
at node pairs: the determinant is a plain LU of the weighted sample matrix.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .determinants import lu_det
from .errors import SizeError
from .kernelcore import Grid, SemiSeparableKernel

#: largest allowed dimension of the dense matrix
MAX_DENSE = 6000


@dataclass(frozen=True)
class DenseDiscretization:
    """Symmetrically weighted samples ``w_i^{1/2} K(x_i, x_j) w_j^{1/2}``."""

    matrix: np.ndarray
    grid: Grid
    m: int


def discretize(kern: SemiSeparableKernel, grid: Grid, diagonal: str = "average") -> DenseDiscretization:
    """Build the dense ``(N m) x (N m)`` matrix.

    Parameters
    ----------
    diagonal : {"average", "lower"}
        Value used at ``x_i = x_j``.  ``"lower"`` takes ``f1 g1``;
        ``"average"`` takes ``(f1 g1 + f2 g2) / 2``.  A kernel that jumps
        across the diagonal limits either rule to first order; the average
        gives the smaller error constant.  For continuous kernels the two
        coincide and the rule is second order.
    """
    N, m = grid.n, kern.m
    if N * m > MAX_DENSE:
        raise SizeError(f"dense matrix would be {N * m} x {N * m} (limit {MAX_DENSE})")
    s = kern.sample(grid)
    lower = np.einsum("iak,jkb->iajb", s.f1, s.g1)
    upper = np.einsum("iak,jkb->iajb", s.f2, s.g2)
    idx = np.arange(N)
    mask = (idx[None, :] < idx[:, None])[:, None, :, None]
    K = np.where(mask, lower, upper)
    if diagonal == "lower":
        K[idx, :, idx, :] = lower[idx, :, idx, :]
    elif diagonal == "average":
        K[idx, :, idx, :] = 0.5 * (lower[idx, :, idx, :] + upper[idx, :, idx, :])
    else:
        raise ValueError(f"unknown diagonal rule {diagonal!r}")
    sw = np.sqrt(grid.weights)
    K = K * sw[:, None, None, None] * sw[None, None, :, None]
    return DenseDiscretization(K.reshape(N * m, N * m), grid, m)


def oracle_det(disc: DenseDiscretization, alpha: complex) -> complex:
    """``det(I - alpha M)`` by LU."""
    M = disc.matrix
    return lu_det(np.eye(M.shape[0]) - complex(alpha) * M)


def oracle_det2(disc: DenseDiscretization, alpha: complex) -> complex:
    """``det(I - alpha M) exp(alpha tr M)``."""
    alpha = complex(alpha)
    return oracle_det(disc, alpha) * cmath.exp(alpha * np.trace(disc.matrix))
