"""Schrodinger operators on the half-line and the line.

Jost and regular solutions are computed by Volterra sweeps of the integral
equations built on ``g0(z, x, x') = sin(k (x - x')) / k`` with ``k = z^{1/2}``,
``Im k >= 0``.  The Birman-Schwinger kernels ``-u G0 v`` are exposed as
:class:`~semisep.kernelcore.SemiSeparableKernel` so that their Fredholm
determinants can be compared with the Jost functions.

Writing ``g0 = C(x) B(x')/V(x')`` with

    C(x) = [sin kx, -cos kx] / k,     B(x') = [cos kx'; sin kx'] V(x'),

a solution ``y`` of ``y = F + C int B y`` has derivative ``F' + C' int B y``
because ``C(x) B(x) = 0``; ``C'(x) = [cos kx, sin kx]``.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.integrate
import scipy.optimize

from .determinants import DEFAULT_TOLERANCES, DeterminantReport, Tolerances, fredholm_det, fredholm_det2, rel_diff
from .errors import DomainError
from .kernelcore import Grid, Interval, SemiSeparableKernel
from .volterra import check_resolution, march

#: smallest |z| accepted, the free Green's functions carry z^{-1/2}
Z_MIN = 1e-6
#: default imaginary offset for evaluations on the positive real axis
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter ``z`` with the branch ``k = z^{1/2}``, ``Im k >= 0``."""

    z: complex
    k: complex = field(init=False)

    def __init__(self, z: complex, z_min: float = Z_MIN):
        z = complex(z)
        if not abs(z) >= z_min:
            raise DomainError(f"|z| = {abs(z):.3g} is below the guard {z_min:.3g}")
        k = cmath.sqrt(z)
        if k.imag < 0:
            k = -k
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", k)

    @property
    def sqrt_z(self) -> complex:
        return self.k


def _as_point(zp) -> SpectralPoint:
    return zp if isinstance(zp, SpectralPoint) else SpectralPoint(zp)


@dataclass(frozen=True, eq=False)
class Potential:
    """Scalar potential with compact support.

    Parameters
    ----------
    V : callable
        Vectorized ``x -> V(x)``.  Values outside ``support`` are ignored.
    support : (float, float)
        ``V`` vanishes outside this interval.
    side : {"half-line", "full-line"}
    breakpoints : sequence of float
        Points where ``V`` may jump.  The support ends are always treated as
        breakpoints.  At a breakpoint the potential is sampled as the mean of
        its one-sided limits, which keeps the trapezoid rule second order.
    """

    V: Callable[[np.ndarray], np.ndarray]
    support: tuple
    side: str = "half-line"
    breakpoints: tuple = ()

    def __post_init__(self):
        lo, hi = map(float, self.support)
        if not lo < hi:
            raise ValueError("support must have lo < hi")
        if self.side not in ("half-line", "full-line"):
            raise ValueError(f"unknown side {self.side!r}")
        if self.side == "half-line" and lo < 0:
            raise ValueError("a half-line potential lives on [0, inf)")
        cuts = {lo, hi} | {float(b) for b in self.breakpoints if lo < float(b) < hi}
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "breakpoints", tuple(sorted(cuts)))

    @classmethod
    def square_well(cls, depth: complex, lo: float, hi: float, side: str = "half-line") -> "Potential":
        """``V = depth`` on ``(lo, hi)`` and zero elsewhere."""
        depth = complex(depth)
        return cls(lambda x: np.full(np.shape(x), depth), (lo, hi), side)

    @classmethod
    def tabulated(cls, xs: Sequence[float], values: Sequence[complex], side: str = "half-line") -> "Potential":
        """Linear interpolation of samples; zero outside the sampled range."""
        xs = np.asarray(xs, dtype=float)
        vals = np.asarray(values, dtype=np.complex128)
        order = np.argsort(xs)
        xs, vals = xs[order], vals[order]

        def V(x):
            return np.interp(x, xs, vals.real) + 1j * np.interp(x, xs, vals.imag)

        return cls(V, (float(xs[0]), float(xs[-1])), side)

    @classmethod
    def truncated(cls, V, side: str = "half-line", tol: float = 1e-10, start: float = 1.0, limit: float = 1e4) -> "Potential":
        """Cut an integrable tail where the remaining ``int |V|`` drops below ``tol``."""

        def tail(R: float) -> float:
            right = scipy.integrate.quad(lambda t: abs(complex(V(np.array([t]))[0])), R, np.inf, limit=200)[0]
            if side == "half-line":
                return right
            left = scipy.integrate.quad(lambda t: abs(complex(V(np.array([t]))[0])), -np.inf, -R, limit=200)[0]
            return right + left

        R = float(start)
        while tail(R) >= tol:
            R *= 2
            if R > limit:
                raise ValueError("potential tail does not become negligible")
        return cls(V, (0.0 if side == "half-line" else -R, R), side)

    def _raw(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self.support
        vals = np.asarray(self.V(x), dtype=np.complex128) * np.ones(np.shape(x))
        return np.where((x >= lo) & (x <= hi), vals, 0.0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self._raw(x)
        domain_lo = 0.0 if self.side == "half-line" else -np.inf
        for b in self.breakpoints:
            hit = x == b
            if not np.any(hit):
                continue
            d = 1e-9 * max(1.0, abs(b))
            left = self._raw(np.array([b - d]))[0]
            right = self._raw(np.array([b + d]))[0]
            value = right if b - d < domain_lo else 0.5 * (left + right)
            out = np.where(hit, value, out)
        return out

    def factors(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``u = |V|^{1/2} exp(i arg V)`` and ``v = |V|^{1/2}``, so ``u v = V``."""
        Vx = self(x)
        v = np.sqrt(np.abs(Vx))
        u = np.where(v > 0, Vx / np.where(v > 0, v, 1.0), 0.0)
        return u, v

    def window(self, pad: Optional[float] = None) -> tuple[float, float]:
        """Computational window: ``[0, R + pad]`` on the half-line, ``[lo - pad, hi + pad]`` on the line.

        The default pad is a tenth of the support length.  A positive pad keeps
        the jumps at the support ends interior to the grid, where the averaged
        sample is the right trapezoid value.
        """
        lo, hi = self.support
        p = 0.1 * (hi - lo) if pad is None else float(pad)
        if p < 0:
            raise ValueError("pad must be non-negative")
        if self.side == "half-line":
            return 0.0, hi + p
        return lo - p, hi + p

    def grid(self, n: int, pad: Optional[float] = None) -> Grid:
        """Trapezoid grid on :meth:`window` with the breakpoints as nodes.

        Without an explicit ``pad`` the pad is rounded to a whole number of
        cells so that the spacing is the same on both sides of the support
        ends.  An averaged sample at a jump is only second order when the two
        neighbouring cells have equal width.
        """
        if pad is None:
            pad = self._uniform_pad(n)
        lo, hi = self.window(pad)
        return Grid.trapezoid(lo, hi, n, self.breakpoints)

    def _uniform_pad(self, n: int) -> Optional[float]:
        lo, hi = self.support
        if self.side == "half-line" and lo > 0:
            return None
        ends = 1 if self.side == "half-line" else 2
        cells = n - 1
        pad_cells = max(1, round(cells * 0.1 / (1 + 0.1 * ends)))
        inner = cells - ends * pad_cells
        if inner < 1:
            return None
        return pad_cells * (hi - lo) / inner

    def interval(self, grid: Grid) -> Interval:
        if self.side == "half-line":
            return Interval(0.0, np.inf, grid.lo, grid.hi)
        return Interval(-np.inf, np.inf, grid.lo, grid.hi)

    def integral(self, grid: Grid) -> complex:
        """Trapezoid ``int V`` on ``grid``."""
        return complex(grid.integrate(self(grid.nodes)))


@dataclass(frozen=True)
class SolutionSamples:
    """Values and first derivatives of a solution at the grid nodes."""

    grid: Grid
    values: np.ndarray
    derivatives: np.ndarray

    def wronskian(self, other: "SolutionSamples") -> np.ndarray:
        """``W(self, other) = self * other' - self' * other`` at every node."""
        return self.values * other.derivatives - self.derivatives * other.values


def _g0_factors(pot: Potential, k: complex, x: np.ndarray):
    """Stacked factors of ``g0 V`` and the derivative factor ``C'``."""
    N = x.size
    s, c = np.sin(k * x), np.cos(k * x)
    Vx = pot(x)
    C = np.stack([s / k, -c / k], axis=-1).reshape(N, 1, 2)
    B = np.stack([c * Vx, s * Vx], axis=-1).reshape(N, 2, 1)
    dC = np.stack([c, s], axis=-1).reshape(N, 1, 2)
    return C, B, dC


def _sweep_solutions(pot, zp, grid, F, dF, direction):
    """Solve ``y = F -/+ int g0 V y`` for one or more columns of data ``F``."""
    zp = _as_point(zp)
    check_resolution(grid, zp.k)
    x = grid.nodes
    C, B, dC = _g0_factors(pot, zp.k, x)
    F = np.asarray(F, dtype=np.complex128).reshape(x.size, 1, -1)
    dF = np.asarray(dF, dtype=np.complex128).reshape(x.size, 1, -1)
    y, T = march(C, B, F, grid, 1.0, direction)
    sign = 1.0 if direction == "right" else -1.0
    dy = dF + sign * (dC @ T)
    return y[:, 0, :], dy[:, 0, :]


def jost_solution_halfline(pot: Potential, zp, grid: Grid) -> SolutionSamples:
    """Jost solution ``f(z, x) = e^{ikx} - int_x^inf g0(x, x') V f dx'``."""
    zp = _as_point(zp)
    k, x = zp.k, grid.nodes
    e = np.exp(1j * k * x)
    y, dy = _sweep_solutions(pot, zp, grid, e, 1j * k * e, "left")
    return SolutionSamples(grid, y[:, 0], dy[:, 0])


def regular_solution_halfline(pot: Potential, zp, grid: Grid) -> SolutionSamples:
    """Regular solution ``phi(z, x) = sin(kx)/k + int_0^x g0(x, x') V phi dx'``."""
    zp = _as_point(zp)
    k, x = zp.k, grid.nodes
    y, dy = _sweep_solutions(pot, zp, grid, np.sin(k * x) / k, np.cos(k * x), "right")
    return SolutionSamples(grid, y[:, 0], dy[:, 0])


def build_halfline_kernel(pot: Potential, zp, grid: Optional[Grid] = None) -> SemiSeparableKernel:
    """Kernel ``-u(x) G0_+(z, x, x') v(x')`` of the half-line problem.

    ``G0_+ = sin(k min) e^{ik max} / k`` splits as ``f1 = -u e^{ikx}``,
    ``g1 = v sin(kx)/k``, ``f2 = -u sin(kx)/k``, ``g2 = v e^{ikx}``.
    """
    zp = _as_point(zp)
    k = zp.k
    lo, hi = (grid.lo, grid.hi) if grid is not None else pot.window()
    interval = Interval(0.0, np.inf, lo, hi)
    u = lambda x: pot.factors(x)[0]
    v = lambda x: pot.factors(x)[1]
    return SemiSeparableKernel.scalar(
        lambda x: -u(x) * np.exp(1j * k * x),
        lambda x: v(x) * np.sin(k * x) / k,
        lambda x: -u(x) * np.sin(k * x) / k,
        lambda x: v(x) * np.exp(1j * k * x),
        interval,
        wavenumber=k,
    )


@dataclass(frozen=True)
class JostReport:
    """Jost function by every available route.

    ``value`` is the primary route (boundary value of the Jost solution or
    Wronskian); ``routes`` maps route names to values and
    ``route_discrepancy`` is the largest relative gap among them.
    """

    z: complex
    value: complex
    routes: dict
    determinant: DeterminantReport
    route_discrepancy: float
    tolerance: float

    @property
    def flagged(self) -> bool:
        return not (self.route_discrepancy <= self.tolerance)

    def __complex__(self) -> complex:
        return complex(self.value)


def _spread(values) -> float:
    values = list(values)
    return max(rel_diff(a, b) for a in values for b in values)


def jost_function_halfline(pot: Potential, zp, grid: Grid, tol: Tolerances = DEFAULT_TOLERANCES) -> JostReport:
    """``F(z) = f(z, 0)`` cross-checked against both integral forms and ``det(I - K(z))``.

    The integral forms are ``1 + (1/k) int sin(kx) V f`` and
    ``1 + int e^{ikx} V phi``.
    """
    zp = _as_point(zp)
    k, x = zp.k, grid.nodes
    Vx = pot(x)
    f = jost_solution_halfline(pot, zp, grid)
    phi = regular_solution_halfline(pot, zp, grid)
    via_f = 1 + complex(grid.integrate(np.sin(k * x) * Vx * f.values)) / k
    via_phi = 1 + complex(grid.integrate(np.exp(1j * k * x) * Vx * phi.values))
    det = fredholm_det(build_halfline_kernel(pot, zp, grid), 1.0, grid, tol)
    routes = {
        "boundary": complex(f.values[0]),
        "sine_integral": via_f,
        "exp_integral": via_phi,
        "det_a": det.det_a,
        "det_b": det.det_b,
    }
    return JostReport(zp.z, routes["boundary"], routes, det, _spread(routes.values()), tol.route)


def find_halfline_zero(pot: Potential, lo: float, hi: float, grid: Grid, xtol: float = 1e-12) -> float:
    """Zero of the (real) Jost function on the negative axis ``lo < z < hi < 0``."""

    def F(z):
        return complex(jost_solution_halfline(pot, z, grid).values[0]).real

    return float(scipy.optimize.brentq(F, lo, hi, xtol=xtol))


def jost_solutions_line(pot: Potential, zp, grid: Grid) -> tuple[SolutionSamples, SolutionSamples]:
    """Jost solutions ``f_+`` (right sweep data at +inf) and ``f_-``."""
    zp = _as_point(zp)
    k, x = zp.k, grid.nodes
    ep, em = np.exp(1j * k * x), np.exp(-1j * k * x)
    yp, dyp = _sweep_solutions(pot, zp, grid, ep, 1j * k * ep, "left")
    ym, dym = _sweep_solutions(pot, zp, grid, em, -1j * k * em, "right")
    return SolutionSamples(grid, yp[:, 0], dyp[:, 0]), SolutionSamples(grid, ym[:, 0], dym[:, 0])


def build_line_kernel(pot: Potential, zp, grid: Optional[Grid] = None) -> SemiSeparableKernel:
    """Kernel ``-u(x) (i/2k) e^{ik|x-x'|} v(x')`` of the line problem."""
    zp = _as_point(zp)
    k = zp.k
    lo, hi = (grid.lo, grid.hi) if grid is not None else pot.window()
    c = 1j / (2 * k)
    u = lambda x: pot.factors(x)[0]
    v = lambda x: pot.factors(x)[1]
    return SemiSeparableKernel.scalar(
        lambda x: -u(x) * np.exp(1j * k * x),
        lambda x: c * v(x) * np.exp(-1j * k * x),
        lambda x: -u(x) * np.exp(-1j * k * x),
        lambda x: c * v(x) * np.exp(1j * k * x),
        Interval(-np.inf, np.inf, lo, hi),
        wavenumber=k,
    )


def jost_function_line(pot: Potential, zp, grid: Grid, tol: Tolerances = DEFAULT_TOLERANCES) -> JostReport:
    """``F(z) = W(f_-, f_+) / (2ik)``, the inverse transmission coefficient.

    Also evaluated as ``1 - (1/2ik) int e^{-+ikx} V f_+-`` and as
    ``det(I - K(z))`` by both endpoint routes.  The Wronskian is taken at the
    right end; its spread along the grid is kept as ``routes["wronskian_spread"]``.
    """
    zp = _as_point(zp)
    k, x = zp.k, grid.nodes
    Vx = pot(x)
    fp, fm = jost_solutions_line(pot, zp, grid)
    W = fm.wronskian(fp) / (2j * k)
    via_plus = 1 - complex(grid.integrate(np.exp(-1j * k * x) * Vx * fp.values)) / (2j * k)
    via_minus = 1 - complex(grid.integrate(np.exp(1j * k * x) * Vx * fm.values)) / (2j * k)
    det = fredholm_det(build_line_kernel(pot, zp, grid), 1.0, grid, tol)
    routes = {
        "wronskian": complex(W[-1]),
        "plus_integral": via_plus,
        "minus_integral": via_minus,
        "det_a": det.det_a,
        "det_b": det.det_b,
    }
    spread = _spread(routes.values())
    out = JostReport(zp.z, routes["wronskian"], routes, det, spread, tol.route)
    out.routes["wronskian_spread"] = float(np.max(np.abs(W - W[-1])))
    return out


def transmission_coefficient(pot: Potential, lam: float, grid: Grid, epsilon: float = DEFAULT_EPSILON) -> complex:
    """``T(lam) = 1 / F(lam + i epsilon)`` for real ``lam > 0``."""
    return 1.0 / complex(jost_function_line(pot, complex(lam, epsilon), grid))


def build_system_kernel(pot: Potential, zp, grid: Optional[Grid] = None) -> SemiSeparableKernel:
    """Two-component kernel of the first-order system for ``(psi, psi')``.

    ``m = 2`` and ``n1 = n2 = 1``: ``f1 = -u (1, ik)^T e^{ikx}``,
    ``f2 = -u (1, -ik)^T e^{-ikx}``, ``g1 = v ((i/2k) e^{-ikx}, 0)``,
    ``g2 = v ((i/2k) e^{ikx}, 0)``.  The kernel jumps across the diagonal, so
    only its 2-modified determinant is meaningful.
    """
    zp = _as_point(zp)
    k = zp.k
    lo, hi = (grid.lo, grid.hi) if grid is not None else pot.window()
    c = 1j / (2 * k)

    def f1(x):
        u = pot.factors(x)[0]
        e = np.exp(1j * k * x)
        return np.stack([-u * e, -u * 1j * k * e], axis=-1).reshape(-1, 2, 1)

    def f2(x):
        u = pot.factors(x)[0]
        e = np.exp(-1j * k * x)
        return np.stack([-u * e, u * 1j * k * e], axis=-1).reshape(-1, 2, 1)

    def g1(x):
        v = pot.factors(x)[1]
        return np.stack([c * v * np.exp(-1j * k * x), np.zeros_like(v)], axis=-1).reshape(-1, 1, 2)

    def g2(x):
        v = pot.factors(x)[1]
        return np.stack([c * v * np.exp(1j * k * x), np.zeros_like(v)], axis=-1).reshape(-1, 1, 2)

    return SemiSeparableKernel(2, 1, 1, f1, g1, f2, g2, Interval(-np.inf, np.inf, lo, hi), wavenumber=k)


@dataclass(frozen=True)
class SystemReport:
    """2-modified determinant of the first-order system and its two identities."""

    z: complex
    det2: complex
    jost_side: complex
    scalar_det2: complex
    system: DeterminantReport
    jost: JostReport
    discrepancy_jost: float
    discrepancy_scalar: float
    tolerance: float

    @property
    def route_discrepancy(self) -> float:
        return max(self.discrepancy_jost, self.discrepancy_scalar, self.system.det2_discrepancy)

    @property
    def flagged(self) -> bool:
        return not (self.route_discrepancy <= self.tolerance)

    def __complex__(self) -> complex:
        return complex(self.det2)


def first_order_system_det2(pot: Potential, zp, grid: Grid, tol: Tolerances = DEFAULT_TOLERANCES) -> SystemReport:
    """``det2(I - K_sys(z))`` compared with ``F(z) exp(-(i/2k) int V)`` and ``det2(I - K(z))``."""
    zp = _as_point(zp)
    system = fredholm_det2(build_system_kernel(pot, zp, grid), 1.0, grid, tol)
    jost = jost_function_line(pot, zp, grid, tol)
    scalar = fredholm_det2(build_line_kernel(pot, zp, grid), 1.0, grid, tol)
    jost_side = jost.value * cmath.exp(-1j * pot.integral(grid) / (2 * zp.k))
    return SystemReport(
        z=zp.z,
        det2=system.det2_a,
        jost_side=jost_side,
        scalar_det2=scalar.det2_a,
        system=system,
        jost=jost,
        discrepancy_jost=rel_diff(system.det2_a, jost_side),
        discrepancy_scalar=rel_diff(system.det2_a, scalar.det2_a),
        tolerance=tol.route,
    )


def system_conjugation_residual(pot: Potential, zp, xs) -> float:
    """Max entry of ``T^{-1} [[0, 1], [V - z, 0]] T - (ik diag(1, -1) - (i/2k) V [[1, 1], [-1, -1]])``.

    ``T = [[1, 1], [ik, -ik]]``.  This ties the fundamental-matrix ODE of the
    system kernel to the first-order form of the Schrodinger equation.
    """
    zp = _as_point(zp)
    k, z = zp.k, zp.z
    T = np.array([[1, 1], [1j * k, -1j * k]])
    worst = 0.0
    for x, Vx in zip(np.atleast_1d(xs), pot(np.atleast_1d(np.asarray(xs, dtype=float)))):
        lhs = np.linalg.solve(T, np.array([[0, 1], [Vx - z, 0]]) @ T)
        rhs = 1j * k * np.diag([1, -1]) - (1j / (2 * k)) * Vx * np.array([[1, 1], [-1, -1]])
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
