"""Fredholm and 2-modified Fredholm determinants from the fundamental matrix.

For a trace-class semi-separable kernel

    det(I - alpha K) = det U(a, alpha) = det U(b, alpha),

and for a Hilbert-Schmidt one

    det2(I - alpha K) = det U(a, alpha) exp(alpha int tr f1 g1)
                      = det U(b, alpha) exp(alpha int tr f2 g2).

Both endpoint routes are always evaluated and their disagreement is
reported; nothing silently picks one of them.
"""
from __future__ import annotations

import cmath
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConditioningError, PoleError, TraceClassWarning
from .kernelcore import Grid, SemiSeparableKernel
from .volterra import FundamentalSolution, fundamental_solution


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used to flag reports.

    Attributes
    ----------
    route : float
        Relative disagreement allowed between determinant routes.
    invariant : float
        Tolerance for exact identities (trace routes, Volterra triviality).
    oracle : float
        Agreement expected with the dense quadrature oracle.
    """

    route: float = 1e-7
    invariant: float = 1e-9
    oracle: float = 1e-4


DEFAULT_TOLERANCES = Tolerances()


def lu_det(M: np.ndarray) -> complex:
    """Determinant of a small square matrix by LU with partial pivoting."""
    M = np.asarray(M, dtype=np.complex128)
    if M.shape == (0, 0):
        return 1.0 + 0j
    lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    sign = (-1) ** int(np.sum(piv != np.arange(piv.size)))
    return complex(sign * np.prod(np.diag(lu)))


def rel_diff(x: complex, y: complex) -> float:
    """``|x - y| / max(1, |x|)``."""
    return abs(x - y) / max(1.0, abs(x))


@dataclass(frozen=True)
class DeterminantReport:
    """All determinant routes for one ``(kernel, alpha, grid)``.

    ``trace_1`` and ``trace_2`` are the quadratures of ``tr(f1 g1)`` and
    ``tr(f2 g2)``; for trace-class kernels both equal ``tr K``.
    ``route_discrepancy`` refers to ``det`` or ``det2`` depending on
    ``kind``.
    """

    alpha: complex
    det_a: complex
    det_b: complex
    det2_a: complex
    det2_b: complex
    trace_1: complex
    trace_2: complex
    exp_factor_1: complex
    exp_factor_2: complex
    det_discrepancy: float
    det2_discrepancy: float
    trace_discrepancy: float
    kind: str = "det"
    tolerance: float = DEFAULT_TOLERANCES.route
    fundamental: Optional[FundamentalSolution] = field(default=None, repr=False, compare=False)

    @property
    def route_discrepancy(self) -> float:
        return self.det_discrepancy if self.kind == "det" else self.det2_discrepancy

    @property
    def flagged(self) -> bool:
        return not (self.route_discrepancy <= self.tolerance)

    @property
    def trace_K(self) -> complex:
        return self.trace_1

    @property
    def value(self) -> complex:
        """The a-side value of the requested kind."""
        return self.det_a if self.kind == "det" else self.det2_a

    def __complex__(self) -> complex:
        return complex(self.value)


def _traces(kern: SemiSeparableKernel, grid: Grid) -> tuple[complex, complex]:
    s = kern.sample(grid)
    t1 = np.einsum("kij,kji->k", s.f1, s.g1) if kern.n1 else np.zeros(grid.n)
    t2 = np.einsum("kij,kji->k", s.f2, s.g2) if kern.n2 else np.zeros(grid.n)
    return complex(grid.integrate(t1)), complex(grid.integrate(t2))


def trace_K(kern: SemiSeparableKernel, grid: Grid, tolerance: float = DEFAULT_TOLERANCES.route) -> complex:
    """``int tr(f1 g1)``, warning when ``int tr(f2 g2)`` disagrees.

    The two expressions coincide for trace-class kernels; a mismatch means
    the kernel is at best Hilbert-Schmidt on this grid.
    """
    t1, t2 = _traces(kern, grid)
    if rel_diff(t1, t2) > tolerance:
        warnings.warn(
            f"trace routes differ ({t1} vs {t2}); the kernel may not be trace class",
            TraceClassWarning,
            stacklevel=2,
        )
    return t1


def determinant_report(
    kern: SemiSeparableKernel,
    alpha: complex,
    grid: Grid,
    kind: str = "det",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> DeterminantReport:
    """Evaluate every route once and package the result."""
    alpha = complex(alpha)
    _, fs = fundamental_solution(kern, alpha, grid)
    det_a = lu_det(fs.U[0])
    det_b = lu_det(fs.U[-1])
    t1, t2 = _traces(kern, grid)
    e1, e2 = cmath.exp(alpha * t1), cmath.exp(alpha * t2)
    det2_a, det2_b = det_a * e1, det_b * e2
    return DeterminantReport(
        alpha=alpha,
        det_a=det_a,
        det_b=det_b,
        det2_a=det2_a,
        det2_b=det2_b,
        trace_1=t1,
        trace_2=t2,
        exp_factor_1=e1,
        exp_factor_2=e2,
        det_discrepancy=rel_diff(det_a, det_b),
        det2_discrepancy=rel_diff(det2_a, det2_b),
        trace_discrepancy=rel_diff(t1, t2),
        kind=kind,
        tolerance=tol.route,
        fundamental=fs,
    )


def fredholm_det(kern: SemiSeparableKernel, alpha: complex, grid: Grid, tol: Tolerances = DEFAULT_TOLERANCES) -> DeterminantReport:
    """``det(I - alpha K)`` through ``det U(a)`` and ``det U(b)``.

    The report is flagged (never raised) when the routes disagree beyond
    ``tol.route``.
    """
    return determinant_report(kern, alpha, grid, "det", tol)


def fredholm_det2(kern: SemiSeparableKernel, alpha: complex, grid: Grid, tol: Tolerances = DEFAULT_TOLERANCES) -> DeterminantReport:
    """``det2(I - alpha K)`` with the exponential trace corrections on each side."""
    return determinant_report(kern, alpha, grid, "det2", tol)


def _projector(n1: int, n2: int) -> np.ndarray:
    """Projector onto the last ``n2`` coordinates."""
    return np.diag(np.r_[np.zeros(n1), np.ones(n2)]).astype(np.complex128)


def resolvent_matrix(
    kern: SemiSeparableKernel,
    alpha: complex,
    grid: Grid,
    cond_limit: float = 1e12,
    pole_tol: float = 1e-12,
) -> np.ndarray:
    """Resolvent kernel ``L(x_i, x_j)`` at all node pairs, shape ``(N, m, N, m)``.

    ``(I - alpha K)^{-1} = I + alpha L`` with

        L(x, x') =  C(x) U(x) (I - P) U(x')^{-1} B(x')   for x' <= x,
        L(x, x') = -C(x) U(x) P U(x')^{-1} B(x')         for x  <  x',

    where ``P`` projects onto the ``f2`` block.  ``U(x')^{-1} B(x')`` is an
    LU solve at each node.
    """
    alpha = complex(alpha)
    s = kern.sample(grid)
    _, fs = fundamental_solution(kern, alpha, grid)
    U = fs.U
    if abs(lu_det(U[0])) < pole_tol:
        raise PoleError("det(I - alpha K) vanishes on this grid")
    conds = np.linalg.cond(U)
    if np.any(~np.isfinite(conds)) or np.max(conds) > cond_limit:
        raise ConditioningError("U(x, alpha) is numerically singular on the grid")
    P = _projector(kern.n1, kern.n2)
    left = s.C @ U
    right = np.linalg.solve(U, s.B)
    lower = np.einsum("ian,nk,jkc->iajc", left, np.eye(P.shape[0]) - P, right)
    upper = -np.einsum("ian,nk,jkc->iajc", left, P, right)
    N = grid.n
    below = (np.arange(N)[None, :] <= np.arange(N)[:, None])[:, None, :, None]
    return np.where(below, lower, upper)


def resolvent_kernel(kern: SemiSeparableKernel, alpha: complex, grid: Grid, x: float, xp: float) -> np.ndarray:
    """Resolvent kernel at one point pair.

    ``U`` is taken at the nodes and linearly interpolated in between; the
    factors ``C`` and ``B`` are evaluated exactly.
    """
    alpha = complex(alpha)
    _, fs = fundamental_solution(kern, alpha, grid)
    if abs(lu_det(fs.U[0])) < 1e-12:
        raise PoleError("det(I - alpha K) vanishes on this grid")
    Ux, Uxp = _interp_U(fs, x), _interp_U(fs, xp)
    if np.linalg.cond(Uxp) > 1e12:
        raise ConditioningError(f"U({xp}) is numerically singular")
    fx, fxp = kern.factors([x]), kern.factors([xp])
    P = _projector(kern.n1, kern.n2)
    middle = np.eye(P.shape[0]) - P if xp <= x else -P
    return fx.C[0] @ Ux @ middle @ np.linalg.solve(Uxp, fxp.B[0])


def _interp_U(fs: FundamentalSolution, x: float) -> np.ndarray:
    nodes = fs.grid.nodes
    if not nodes[0] <= x <= nodes[-1]:
        raise ValueError(f"{x} outside the grid")
    j = int(np.clip(np.searchsorted(nodes, x) - 1, 0, nodes.size - 2))
    t = (x - nodes[j]) / (nodes[j + 1] - nodes[j])
    return (1 - t) * fs.U[j] + t * fs.U[j + 1]


def liouville_residual(fs: FundamentalSolution, kern: SemiSeparableKernel) -> float:
    """Max relative gap between ``det U(x)`` and ``det U(a) exp(alpha int_a^x tr A)``."""
    from .kernelcore import trace_A

    grid = fs.grid
    trA = trace_A(kern.sample(grid))
    predicted = lu_det(fs.U[0]) * np.exp(fs.alpha * grid.cumulative(trA))
    actual = np.linalg.det(fs.U)
    return float(np.max(np.abs(actual - predicted) / np.maximum(1.0, np.abs(actual))))
