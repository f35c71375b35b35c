"""Periodic Schrodinger operators: monodromy, discriminant and the kernels ``K_theta``.

On one period ``[0, omega]`` with quasi-periodic boundary condition of phase
``theta``, ``det(I - K_theta(z))`` equals

    (Delta(z) - cos theta) / (cos(k omega) - cos theta),

where ``Delta`` is half the trace of the monodromy matrix.  The determinant
is evaluated through the fundamental matrix of the semi-separable kernel
and through two explicit 2x2 expansions built on the solutions ``psi_+-``
(data at ``omega``) and ``phi_+-`` (data at ``0``).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._ode import rk4_schrodinger
from .determinants import DEFAULT_TOLERANCES, DeterminantReport, Tolerances, fredholm_det, rel_diff
from .errors import SpectralCollisionError
from .kernelcore import Grid, Interval, SemiSeparableKernel
from .schrodinger import SolutionSamples, SpectralPoint, _as_point, _g0_factors
from .volterra import check_resolution, march

#: minimum allowed |cos(k omega) - cos(theta)|
COLLISION_GUARD = 1e-8


@dataclass(frozen=True, eq=False)
class PeriodicPotential:
    """Potential ``V`` on one period ``[0, omega]``."""

    V: Callable[[np.ndarray], np.ndarray]
    omega: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "omega", float(self.omega))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.V(x), dtype=np.complex128) * np.ones(x.shape)

    def factors(self, x):
        Vx = self(x)
        v = np.sqrt(np.abs(Vx))
        u = np.where(v > 0, Vx / np.where(v > 0, v, 1.0), 0.0)
        return u, v

    def grid(self, n: int) -> Grid:
        return Grid.trapezoid(0.0, self.omega, n)


@dataclass(frozen=True)
class FloquetParams:
    """Quasi-momentum ``theta`` and spectral point away from the free spectrum."""

    theta: float
    zp: SpectralPoint
    guard: float = COLLISION_GUARD

    def __init__(self, theta: float, zp, omega: float, guard: float = COLLISION_GUARD):
        zp = _as_point(zp)
        gap = cmath.cos(zp.k * omega) - math.cos(theta)
        if not abs(gap) > guard:
            raise SpectralCollisionError(
                f"cos(k omega) - cos(theta) = {abs(gap):.3g} is within the guard {guard:.3g}"
            )
        object.__setattr__(self, "theta", float(theta))
        object.__setattr__(self, "zp", zp)
        object.__setattr__(self, "guard", guard)

    @property
    def k(self) -> complex:
        return self.zp.k


def monodromy(pot: PeriodicPotential, zp, steps: int = 2000) -> tuple[np.ndarray, complex]:
    """Monodromy matrix ``Phi(z, omega)`` and ``Delta = tr Phi / 2``.

    The columns of ``Phi`` are ``(c, c')`` and ``(s, s')`` with
    ``c(0) = s'(0) = 1`` and ``c'(0) = s(0) = 0``, integrated by RK4.
    """
    zp = _as_point(zp)
    Phi = rk4_schrodinger(pot, zp.z, 0.0, pot.omega, np.eye(2), steps)
    return Phi, complex(0.5 * (Phi[0, 0] + Phi[1, 1]))


def _phase(pot: PeriodicPotential, params: FloquetParams):
    k, w, th = params.k, pot.omega, params.theta
    E = cmath.exp(1j * th) * cmath.exp(-1j * k * w)
    Ep = cmath.exp(-1j * th) * cmath.exp(-1j * k * w)
    return k, E, Ep


def build_Ktheta_kernel(pot: PeriodicPotential, params: FloquetParams) -> SemiSeparableKernel:
    """Kernel ``-u G0_theta v`` with ``m = 1``, ``n1 = n2 = 2`` and ``f1 = f2``."""
    k, E, Ep = _phase(pot, params)
    c = 1j / (2 * k)

    def f(x):
        u = pot.factors(x)[0]
        return np.stack([-u * np.exp(1j * k * x), -u * np.exp(-1j * k * x)], axis=-1).reshape(-1, 1, 2)

    def g1(x):
        v = pot.factors(x)[1]
        top = E * np.exp(-1j * k * x) / (E - 1)
        bottom = np.exp(1j * k * x) / (Ep - 1)
        return (c * v[:, None] * np.stack([top, bottom], axis=-1)).reshape(-1, 2, 1)

    def g2(x):
        v = pot.factors(x)[1]
        top = np.exp(-1j * k * x) / (E - 1)
        bottom = Ep * np.exp(1j * k * x) / (Ep - 1)
        return (c * v[:, None] * np.stack([top, bottom], axis=-1)).reshape(-1, 2, 1)

    return SemiSeparableKernel(1, 2, 2, f, g1, f, g2, Interval(0.0, pot.omega), wavenumber=k)


def free_green_theta(pot: PeriodicPotential, params: FloquetParams, x: float, xp: float) -> complex:
    """Free quasi-periodic Green's function evaluated from its closed form."""
    k, E, Ep = _phase(pot, params)
    d = x - xp
    return 1j / (2 * k) * (cmath.exp(1j * k * abs(d)) + cmath.exp(1j * k * d) / (E - 1) + cmath.exp(-1j * k * d) / (Ep - 1))


@dataclass(frozen=True)
class FloquetSolutions:
    phi_plus: SolutionSamples
    phi_minus: SolutionSamples
    psi_plus: SolutionSamples
    psi_minus: SolutionSamples


def floquet_solutions(pot: PeriodicPotential, zp, grid: Grid) -> FloquetSolutions:
    """``phi_+-`` (equal to ``e^{+-ikx}`` at 0) and ``psi_+-`` (equal to ``e^{+-ikx}`` at omega)."""
    zp = _as_point(zp)
    k, x = zp.k, grid.nodes
    check_resolution(grid, k)
    C, B, dC = _g0_factors(pot, k, x)
    E = np.stack([np.exp(1j * k * x), np.exp(-1j * k * x)], axis=-1).reshape(-1, 1, 2)
    dE = E * np.array([1j * k, -1j * k])
    phi, S = march(C, B, E, grid, 1.0, "right")
    dphi = dE + dC @ S
    psi, T = march(C, B, E, grid, 1.0, "left")
    dpsi = dE - dC @ T
    pack = lambda y, dy, j: SolutionSamples(grid, y[:, 0, j], dy[:, 0, j])
    return FloquetSolutions(pack(phi, dphi, 0), pack(phi, dphi, 1), pack(psi, dpsi, 0), pack(psi, dpsi, 1))


@dataclass(frozen=True)
class FloquetReport:
    """``det(I - K_theta)`` by three routes and the discriminant it implies."""

    z: complex
    theta: float
    det_route: DeterminantReport
    det_psi: complex
    det_phi: complex
    delta_recovered: complex
    delta_monodromy: complex
    route_discrepancy: float
    delta_discrepancy: float
    tolerance: float

    @property
    def det(self) -> complex:
        return self.det_route.det_a

    @property
    def flagged(self) -> bool:
        return not (max(self.route_discrepancy, self.delta_discrepancy) <= self.tolerance)

    def __complex__(self) -> complex:
        return complex(self.det)


def det_Ktheta(
    pot: PeriodicPotential,
    params: FloquetParams,
    grid: Grid,
    tol: Tolerances = DEFAULT_TOLERANCES,
    ode_steps: int = 2000,
) -> FloquetReport:
    """Evaluate ``det(I - K_theta(z))`` three ways and recover ``Delta(z)``.

    Routes: the fundamental matrix of the kernel, the expansion in integrals of
    ``psi_+-`` and the expansion in integrals of ``phi_+-``.  ``Delta`` is
    recovered as ``cos theta + det (cos(k omega) - cos theta)`` and compared
    with the RK4 monodromy.
    """
    k, E, Ep = _phase(pot, params)
    z = params.zp.z
    x = grid.nodes
    Vx = pot(x)
    sols = floquet_solutions(pot, params.zp, grid)
    ep, em = np.exp(1j * k * x), np.exp(-1j * k * x)
    I = lambda w, y: complex(grid.integrate(w * Vx * y.values))
    c = 1j / (2 * k)
    denom = (E - 1) * (Ep - 1)

    det_psi = (1 + c * E / (E - 1) * I(em, sols.psi_plus)) * (1 + c / (Ep - 1) * I(ep, sols.psi_minus)) + (
        E / (4 * z * denom)
    ) * I(ep, sols.psi_plus) * I(em, sols.psi_minus)
    det_phi = (1 + c / (E - 1) * I(em, sols.phi_plus)) * (1 + c * Ep / (Ep - 1) * I(ep, sols.phi_minus)) + (
        Ep / (4 * z * denom)
    ) * I(ep, sols.phi_plus) * I(em, sols.phi_minus)

    report = fredholm_det(build_Ktheta_kernel(pot, params), 1.0, grid, tol)
    values = [report.det_a, report.det_b, det_psi, det_phi]
    spread = max(rel_diff(a, b) for a in values for b in values)
    cos_t = math.cos(params.theta)
    delta_rec = cos_t + report.det_a * (cmath.cos(k * pot.omega) - cos_t)
    _, delta_mono = monodromy(pot, params.zp, ode_steps)
    return FloquetReport(
        z=z,
        theta=params.theta,
        det_route=report,
        det_psi=complex(det_psi),
        det_phi=complex(det_phi),
        delta_recovered=complex(delta_rec),
        delta_monodromy=delta_mono,
        route_discrepancy=spread,
        delta_discrepancy=rel_diff(delta_rec, delta_mono),
        tolerance=tol.route,
    )
