"""Volterra sweeps for the modified factors and the fundamental matrix ``U``.

With ``H(x, x') = C(x) B(x')`` the two second-kind Volterra equations

    fhat1(x) = f1(x) - alpha * int_x^b H(x, x') fhat1(x') dx'
    fhat2(x) = f2(x) + alpha * int_a^x H(x, x') fhat2(x') dx'

are solved by an implicit product-trapezoid march, right-to-left for
``fhat1`` and left-to-right for ``fhat2``.  From the running integrals one
builds the ``n x n`` matrix

    U(x) = [[I - alpha int_x^b g1 fhat1,   alpha int_a^x g1 fhat2    ],
            [    alpha int_x^b g2 fhat1,   I - alpha int_a^x g2 fhat2]]

which solves ``U' = alpha A U``.  Both column blocks obey the same discrete
trapezoid recursion, so the discrete ``U`` is an exact trapezoid solution of
that ODE.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConditioningError, ResolutionWarning
from .kernelcore import Grid, KernelSamples, SemiSeparableKernel

#: cells per wavelength below which a resolution warning is emitted
CELLS_PER_WAVELENGTH = 16


@dataclass(frozen=True)
class VolterraSolution:
    """Nodal values of ``fhat1`` (``(N, m, n1)``) and ``fhat2`` (``(N, m, n2)``).

    ``accum1[k]`` holds ``int_{x_k}^b B fhat1`` and ``accum2[k]`` holds
    ``int_a^{x_k} B fhat2`` (trapezoid), both of shape ``(N, n, *)``.
    """

    grid: Grid
    fhat1: np.ndarray
    fhat2: np.ndarray
    alpha: complex
    accum1: np.ndarray
    accum2: np.ndarray


@dataclass(frozen=True)
class FundamentalSolution:
    """Nodal values of ``U(x, alpha)``, shape ``(N, n, n)``."""

    grid: Grid
    U: np.ndarray
    alpha: complex
    n1: int
    n2: int

    @property
    def U11(self) -> np.ndarray:
        return self.U[:, : self.n1, : self.n1]

    @property
    def U12(self) -> np.ndarray:
        return self.U[:, : self.n1, self.n1 :]

    @property
    def U21(self) -> np.ndarray:
        return self.U[:, self.n1 :, : self.n1]

    @property
    def U22(self) -> np.ndarray:
        return self.U[:, self.n1 :, self.n1 :]

    def det(self) -> np.ndarray:
        """``det U`` at every node (LU with partial pivoting)."""
        return np.linalg.det(self.U)


def check_resolution(grid: Grid, wavenumber) -> bool:
    """Warn if the widest cell exceeds a sixteenth of the wavelength ``2 pi / |k|``."""
    k = wavenumber
    if k is None or k == 0:
        return True
    h_max = float(np.max(grid.dx))
    limit = 2 * math.pi / abs(k) / CELLS_PER_WAVELENGTH
    if h_max > limit:
        warnings.warn(
            f"grid spacing {h_max:.3g} exceeds {limit:.3g} (wavelength / {CELLS_PER_WAVELENGTH})",
            ResolutionWarning,
            stacklevel=3,
        )
        return False
    return True


def _require_trapezoid(grid: Grid) -> None:
    if grid.rule != "trapezoid":
        raise ValueError("the Volterra sweep needs a composite trapezoid grid")


def _sweep_right(samples: KernelSamples, alpha: complex):
    C, B = samples.C, samples.B
    return _backend.forward_sweep(C, B, samples.f2, samples.grid.dx, alpha)


def _sweep_left(samples: KernelSamples, alpha: complex):
    # run the forward march on the mirrored grid with the sign of alpha flipped
    C, B = samples.C[::-1], samples.B[::-1]
    y, S = _backend.forward_sweep(C, B, samples.f1[::-1], samples.grid.dx[::-1], -alpha)
    return y[::-1].copy(), S[::-1].copy()


def march(C, B, F, grid: Grid, alpha: complex = 1.0, direction: str = "right"):
    """Solve a Volterra equation with kernel ``C(x) B(x')`` given as arrays.

    ``direction="right"`` solves ``y = F + alpha C int_a^x B y``;
    ``direction="left"`` solves ``y = F - alpha C int_x^b B y``.  Returns
    ``(y, T)`` with ``T`` the running trapezoid integral of ``B y`` over the
    same range as the equation.
    """
    _require_trapezoid(grid)
    if direction == "right":
        return _backend.forward_sweep(C, B, F, grid.dx, alpha)
    if direction == "left":
        y, T = _backend.forward_sweep(C[::-1], B[::-1], F[::-1], grid.dx[::-1], -complex(alpha))
        return y[::-1].copy(), T[::-1].copy()
    raise ValueError(f"unknown direction {direction!r}")


def solve_fhat2(kern: SemiSeparableKernel, alpha: complex, grid: Grid) -> np.ndarray:
    """Left-to-right sweep for ``fhat2``; returns shape ``(N, m, n2)``."""
    _require_trapezoid(grid)
    check_resolution(grid, kern.wavenumber)
    return _sweep_right(kern.sample(grid), complex(alpha))[0]


def solve_fhat1(kern: SemiSeparableKernel, alpha: complex, grid: Grid) -> np.ndarray:
    """Right-to-left sweep for ``fhat1``; returns shape ``(N, m, n1)``."""
    _require_trapezoid(grid)
    check_resolution(grid, kern.wavenumber)
    return _sweep_left(kern.sample(grid), complex(alpha))[0]


def solve(kern: SemiSeparableKernel, alpha: complex, grid: Grid) -> VolterraSolution:
    """Run both sweeps and keep the running integrals."""
    _require_trapezoid(grid)
    check_resolution(grid, kern.wavenumber)
    samples = kern.sample(grid)
    alpha = complex(alpha)
    fhat1, acc1 = _sweep_left(samples, alpha)
    fhat2, acc2 = _sweep_right(samples, alpha)
    return VolterraSolution(grid, fhat1, fhat2, alpha, acc1, acc2)


def assemble_U(kern: SemiSeparableKernel, alpha: complex, grid: Grid, fhat1=None, fhat2=None) -> FundamentalSolution:
    """Build ``U(x, alpha)`` at every node.

    ``fhat1`` and ``fhat2`` may be passed from earlier sweeps, otherwise they
    are computed here.
    """
    alpha = complex(alpha)
    samples = kern.sample(grid)
    if fhat1 is None or fhat2 is None:
        sol = solve(kern, alpha, grid)
        fhat1 = sol.fhat1 if fhat1 is None else fhat1
        fhat2 = sol.fhat2 if fhat2 is None else fhat2
    B = samples.B
    N, n = B.shape[0], B.shape[1]
    n1 = kern.n1
    from_left = grid.cumulative(B @ fhat2)
    from_right = _cum_from_right(grid, B @ fhat1)
    U = np.zeros((N, n, n), dtype=np.complex128)
    U[:, :, :n1] = -alpha * from_right
    U[:, :, n1:] = alpha * from_left
    idx = np.arange(n)
    U[:, idx, idx] += 1.0
    return FundamentalSolution(grid, U, alpha, kern.n1, kern.n2)


def _cum_from_right(grid: Grid, values: np.ndarray) -> np.ndarray:
    steps = 0.5 * (values[1:] + values[:-1]) * grid.dx.reshape((-1,) + (1,) * (values.ndim - 1))
    out = np.zeros_like(values)
    out[:-1] = np.cumsum(steps[::-1], axis=0)[::-1]
    return out


def fundamental_solution(kern: SemiSeparableKernel, alpha: complex, grid: Grid) -> tuple[VolterraSolution, FundamentalSolution]:
    """Sweeps plus ``U`` in one call, reusing the sweep accumulators."""
    sol = solve(kern, alpha, grid)
    N, n = sol.accum1.shape[0], sol.accum1.shape[1]
    U = np.zeros((N, n, n), dtype=np.complex128)
    U[:, :, : kern.n1] = -sol.alpha * sol.accum1
    U[:, :, kern.n1 :] = sol.alpha * sol.accum2
    idx = np.arange(n)
    U[:, idx, idx] += 1.0
    return sol, FundamentalSolution(grid, U, sol.alpha, kern.n1, kern.n2)


def trapezoid_volterra_matrix(kern: SemiSeparableKernel, grid: Grid) -> np.ndarray:
    """Dense ``(N m, N m)`` matrix of the discretized lower Volterra part of ``H``.

    Row ``i`` integrates over ``[a, x_i]`` with the trapezoid weights the
    forward sweep uses, so ``(I - alpha Hw) fhat2 = f2`` holds exactly.
    """
    s = kern.sample(grid)
    C, B = s.C, s.B
    N, m = C.shape[0], C.shape[1]
    H = np.einsum("iab,jbc->iajc", C, B)
    dx = grid.dx
    W = np.zeros((N, N))
    for i in range(1, N):
        W[i, :i] += 0.5 * dx[:i]
        W[i, 1 : i + 1] += 0.5 * dx[:i]
    H = H * W[:, None, :, None]
    return H.reshape(N * m, N * m)


def volterra_resolvent_check(kern: SemiSeparableKernel, alpha: complex, grid: Grid, cond_limit: float = 1e12) -> float:
    """Max entry of ``(I - alpha Hw)(I + alpha Jw) - I`` on the grid.

    ``Jw`` is the discretized Volterra resolvent built from the fundamental
    matrix, ``J(x, x') = C(x) U(x) U(x')^{-1} B(x')`` for ``x' <= x``, with the
    same trapezoid weights as ``Hw``.
    """
    alpha = complex(alpha)
    if alpha == 0:
        return 0.0
    s = kern.sample(grid)
    _, fs = fundamental_solution(kern, alpha, grid)
    U = fs.U
    conds = np.linalg.cond(U)
    if np.any(~np.isfinite(conds)) or np.max(conds) > cond_limit:
        warnings.warn("U(x, alpha) is numerically singular somewhere on the grid", RuntimeWarning, stacklevel=2)
        raise ConditioningError("U(x, alpha) is numerically singular on the grid")
    N, m = s.C.shape[0], s.C.shape[1]
    left = s.C @ U  # (N, m, n)
    right = np.linalg.solve(U, s.B)  # U^{-1} B, (N, n, m)
    J = np.einsum("ian,jnc->iajc", left, right)
    dx = grid.dx
    W = np.zeros((N, N))
    for i in range(1, N):
        W[i, :i] += 0.5 * dx[:i]
        W[i, 1 : i + 1] += 0.5 * dx[:i]
    Jw = (J * W[:, None, :, None]).reshape(N * m, N * m)
    Hw = trapezoid_volterra_matrix(kern, grid)
    eye = np.eye(N * m)
    R = (eye - alpha * Hw) @ (eye + alpha * Jw) - eye
    return float(np.max(np.abs(R)))
