"""Semi-separable kernels, quadrature grids and pointwise matrix evaluation.

A semi-separable kernel on an interval ``(a, b)`` is

    K(x, x') = f1(x) g1(x')   for x' < x,
    K(x, x') = f2(x) g2(x')   for x  < x',

with ``f1`` of shape ``m x n1``, ``g1`` of shape ``n1 x m``, ``f2`` of shape
``m x n2`` and ``g2`` of shape ``n2 x m``.  Everything downstream works with the
stacked factors

    C(x) = [f1(x)  f2(x)]          (m x n)
    B(x) = [g1(x); -g2(x)]         (n x m),   n = n1 + n2,

so that ``H(x, x') = f1 g1 - f2 g2 = C(x) B(x')`` and ``A(x) = B(x) C(x)``.

Factor callables are vectorized: they receive a 1-D array of abscissae of
length ``N`` and return an array of shape ``(N, rows, cols)``.  Scalar kernels
may return shape ``(N,)``.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, ShapeError

Factor = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Interval:
    """Interval ``(a, b)`` with a finite computational window ``[lo, hi]``.

    Parameters
    ----------
    a, b : float
        Endpoints; may be ``-inf`` / ``+inf``.
    lo, hi : float, optional
        Truncation window.  Required when the matching endpoint is infinite,
        defaults to the endpoint otherwise.
    """

    a: float
    b: float
    lo: Optional[float] = None
    hi: Optional[float] = None

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not a < b:
            raise ValueError(f"need a < b, got a={a}, b={b}")
        lo = a if self.lo is None else float(self.lo)
        hi = b if self.hi is None else float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("an infinite endpoint needs a finite truncation")
        if not (a <= lo < hi <= b):
            raise ValueError(f"truncation [{lo}, {hi}] must sit inside ({a}, {b}) with lo < hi")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.a) & (x <= self.b)))


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature nodes and weights on a finite window.

    Use :meth:`trapezoid` or :meth:`gauss_legendre` rather than the
    constructor.  Instances compare by identity, which is what the kernel
    sample cache keys on.
    """

    nodes: np.ndarray
    weights: np.ndarray
    rule: str

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise ValueError("nodes and weights must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def trapezoid(cls, lo: float, hi: float, n: int, breakpoints: Sequence[float] = ()) -> "Grid":
        """Composite trapezoid rule with ``n`` nodes.

        Interior ``breakpoints`` become nodes; the remaining nodes are shared
        among the pieces in proportion to their length, so that jumps of the
        integrand never fall strictly inside a cell.
        """
        lo, hi = float(lo), float(hi)
        cuts = sorted({float(c) for c in breakpoints if lo < float(c) < hi})
        edges = [lo, *cuts, hi]
        pieces = len(edges) - 1
        if n < pieces + 1:
            raise ValueError(f"need at least {pieces + 1} nodes for {len(cuts)} breakpoints")
        lengths = np.diff(edges)
        cells = n - 1
        # proportional split of the cells, at least one per piece
        raw = lengths / lengths.sum() * cells
        counts = np.maximum(1, np.floor(raw).astype(int))
        while counts.sum() < cells:
            counts[np.argmax(raw - counts)] += 1
        while counts.sum() > cells:
            counts[np.argmax(np.where(counts > 1, counts - raw, -np.inf))] -= 1
        parts = [np.linspace(edges[0], edges[1], counts[0] + 1)]
        for j in range(1, pieces):
            parts.append(np.linspace(edges[j], edges[j + 1], counts[j] + 1)[1:])
        nodes = np.concatenate(parts)
        dx = np.diff(nodes)
        weights = np.zeros_like(nodes)
        weights[:-1] += dx / 2
        weights[1:] += dx / 2
        return cls(nodes, weights, "trapezoid")

    @classmethod
    def gauss_legendre(cls, lo: float, hi: float, panels: int, order: int = 8) -> "Grid":
        """Panelized Gauss-Legendre rule with ``panels * order`` nodes."""
        t, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(float(lo), float(hi), panels + 1)
        half = np.diff(edges) / 2
        mid = (edges[:-1] + edges[1:]) / 2
        nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return cls(nodes, weights, "gauss-legendre")

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def lo(self) -> float:
        return float(self.nodes[0])

    @property
    def hi(self) -> float:
        return float(self.nodes[-1])

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Cumulative trapezoid integral from the left end, along axis 0."""
        values = np.asarray(values)
        out = np.zeros_like(values, dtype=np.result_type(values, float))
        steps = 0.5 * (values[1:] + values[:-1])
        steps = steps * self.dx.reshape((-1,) + (1,) * (values.ndim - 1))
        np.cumsum(steps, axis=0, out=out[1:])
        return out

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature of ``values`` sampled at the nodes, along axis 0."""
        values = np.asarray(values)
        w = self.weights.reshape((-1,) + (1,) * (values.ndim - 1))
        return (w * values).sum(axis=0)


@dataclass(frozen=True)
class KernelSamples:
    """Factor values at every node of one grid, shapes ``(N, rows, cols)``."""

    grid: Grid
    f1: np.ndarray
    g1: np.ndarray
    f2: np.ndarray
    g2: np.ndarray

    @property
    def C(self) -> np.ndarray:
        return np.concatenate([self.f1, self.f2], axis=2)

    @property
    def B(self) -> np.ndarray:
        return np.concatenate([self.g1, -self.g2], axis=1)


@dataclass(frozen=True, eq=False)
class SemiSeparableKernel:
    """Matrix-valued semi-separable kernel.

    Parameters
    ----------
    m, n1, n2 : int
        Matrix size of the kernel values and ranks of the lower and upper
        parts.  ``n1`` or ``n2`` may be zero (a pure Volterra kernel); the
        corresponding factors may then be ``None``.
    f1, g1, f2, g2 : callable
        Vectorized factor callables, see the module docstring.
    interval : Interval
    wavenumber : complex, optional
        Oscillation scale of the factors, used only for the grid resolution
        warning in the Volterra sweeps.
    """

    m: int
    n1: int
    n2: int
    f1: Optional[Factor]
    g1: Optional[Factor]
    f2: Optional[Factor]
    g2: Optional[Factor]
    interval: Interval
    wavenumber: Optional[complex] = None
    _cache: "weakref.WeakKeyDictionary" = field(
        default_factory=weakref.WeakKeyDictionary, init=False, repr=False
    )

    def __post_init__(self):
        if self.m < 1 or self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 < 1:
            raise ValueError("need m >= 1, n1, n2 >= 0 and n1 + n2 >= 1")
        for name, rank in (("f1", self.n1), ("g1", self.n1), ("f2", self.n2), ("g2", self.n2)):
            if rank > 0 and getattr(self, name) is None:
                raise ValueError(f"{name} is required when its rank is positive")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def _call(self, name: str, x: np.ndarray) -> np.ndarray:
        rows, cols = {
            "f1": (self.m, self.n1),
            "g1": (self.n1, self.m),
            "f2": (self.m, self.n2),
            "g2": (self.n2, self.m),
        }[name]
        N = x.shape[0]
        if rows == 0 or cols == 0:
            return np.zeros((N, rows, cols), dtype=np.complex128)
        out = np.asarray(getattr(self, name)(x), dtype=np.complex128)
        if out.shape == (N,) and rows == cols == 1:
            out = out.reshape(N, 1, 1)
        elif out.shape == (N,) + (rows * cols,) and (rows == 1 or cols == 1):
            out = out.reshape(N, rows, cols)
        if out.shape != (N, rows, cols):
            raise ShapeError(f"{name} returned shape {out.shape}, expected {(N, rows, cols)}")
        return out

    def factors(self, x) -> KernelSamples:
        """Evaluate all four factors at the points ``x`` (no caching)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return KernelSamples(None, *(self._call(nm, x) for nm in ("f1", "g1", "f2", "g2")))

    def sample(self, grid: Grid) -> KernelSamples:
        """Factor values on ``grid``; computed once per grid and cached."""
        hit = self._cache.get(grid)
        if hit is not None:
            return hit
        if not self.interval.contains(grid.nodes[[0, -1]]):
            raise DomainError("grid extends outside the kernel interval")
        x = grid.nodes
        samples = KernelSamples(grid, *(self._call(nm, x) for nm in ("f1", "g1", "f2", "g2")))
        for arr in (samples.f1, samples.g1, samples.f2, samples.g2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("kernel factors are not finite on the grid")
            arr.setflags(write=False)
        self._cache[grid] = samples
        return samples

    @classmethod
    def scalar(cls, f1, g1, f2, g2, interval: Interval, wavenumber=None) -> "SemiSeparableKernel":
        """Kernel with ``m = n1 = n2 = 1`` built from scalar vectorized functions."""
        return cls(1, 1, 1, f1, g1, f2, g2, interval, wavenumber)


def _check(kern: SemiSeparableKernel, *pts: float) -> None:
    for p in pts:
        if not kern.interval.contains(p):
            raise DomainError(f"point {p} outside ({kern.interval.a}, {kern.interval.b})")


def _at(kern: SemiSeparableKernel, x: float) -> KernelSamples:
    return kern.factors(np.array([float(x)]))


def eval_C(kern: SemiSeparableKernel, x: float) -> np.ndarray:
    """``C(x) = [f1(x) f2(x)]``, shape ``(m, n)``."""
    _check(kern, x)
    return _at(kern, x).C[0]


def eval_B(kern: SemiSeparableKernel, x: float) -> np.ndarray:
    """``B(x) = [g1(x); -g2(x)]``, shape ``(n, m)``."""
    _check(kern, x)
    return _at(kern, x).B[0]


def eval_K(kern: SemiSeparableKernel, x: float, xp: float) -> np.ndarray:
    """Kernel value ``K(x, xp)``; on the diagonal the lower branch ``f1 g1`` is used."""
    _check(kern, x, xp)
    fx, fxp = _at(kern, x), _at(kern, xp)
    if xp <= x:
        return fx.f1[0] @ fxp.g1[0]
    return fx.f2[0] @ fxp.g2[0]


def eval_H(kern: SemiSeparableKernel, x: float, xp: float) -> np.ndarray:
    """``H(x, xp) = f1(x) g1(xp) - f2(x) g2(xp)``."""
    _check(kern, x, xp)
    return eval_C(kern, x) @ eval_B(kern, xp)


def eval_A(kern: SemiSeparableKernel, x: float) -> np.ndarray:
    """``A(x) = [[g1 f1, g1 f2], [-g2 f1, -g2 f2]](x)``, shape ``(n, n)``."""
    _check(kern, x)
    s = _at(kern, x)
    f1, g1, f2, g2 = s.f1[0], s.g1[0], s.f2[0], s.g2[0]
    return np.block([[g1 @ f1, g1 @ f2], [-(g2 @ f1), -(g2 @ f2)]])


def trace_A(samples: KernelSamples) -> np.ndarray:
    """``tr A`` at every sampled node, via ``tr(g1 f1) - tr(g2 f2)``."""
    t1 = np.einsum("kij,kji->k", samples.g1, samples.f1) if samples.f1.shape[2] else 0
    t2 = np.einsum("kij,kji->k", samples.g2, samples.f2) if samples.f2.shape[2] else 0
    return np.zeros(samples.f1.shape[0], dtype=complex) + t1 - t2
