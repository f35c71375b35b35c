"""Kernel builders shared by the test modules."""
from __future__ import annotations

import math

import numpy as np

from semisep.floquet import FloquetParams, PeriodicPotential, build_Ktheta_kernel
from semisep.kernelcore import Grid, Interval, SemiSeparableKernel
from semisep.schrodinger import Potential, build_halfline_kernel, build_line_kernel, build_system_kernel
from semisep.wienerhopf import RationalSymbolKernel, build_kernel

UNIT = Interval(0.0, 1.0)


def _poly_factor(coef: np.ndarray):
    """Callable ``x -> sum_p coef[..., p] x^p`` returning ``(N, rows, cols)``."""
    def f(x):
        powers = np.stack([x ** p for p in range(coef.shape[-1])], axis=-1)
        return np.einsum("rcp,np->nrc", coef, powers)
    return f


def random_kernel(rng, m=1, n1=1, n2=1, degree=2, scale=1.0, interval=UNIT) -> SemiSeparableKernel:
    """Polynomial factors with coefficients uniform in ``[-scale, scale]`` (complex)."""
    def coef(r, c):
        return scale * (rng.uniform(-1, 1, (r, c, degree + 1)) + 1j * rng.uniform(-1, 1, (r, c, degree + 1)))

    parts = {}
    for name, (r, c) in {"f1": (m, n1), "g1": (n1, m), "f2": (m, n2), "g2": (n2, m)}.items():
        parts[name] = _poly_factor(coef(r, c)) if r and c else None
    return SemiSeparableKernel(m, n1, n2, parts["f1"], parts["g1"], parts["f2"], parts["g2"], interval)


def nilpotent_volterra_kernel(rng, r=1, lower=True) -> SemiSeparableKernel:
    """Trace-class Volterra kernel with ``f g = 0`` on the diagonal.

    ``f = P(x) [a(x) I_r, b(x) I_r]`` and ``g = [b(x) Q(x); -a(x) Q(x)]`` so
    ``f(x) g(x) = 0`` for every ``x``; the kernel is ``m x m`` with ``m = r``
    and rank ``2r``.
    """
    a_c = rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3)
    b_c = rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3)
    P_c = rng.uniform(-1, 1, (r, r, 2)) + 1j * rng.uniform(-1, 1, (r, r, 2))
    Q_c = rng.uniform(-1, 1, (r, r, 2)) + 1j * rng.uniform(-1, 1, (r, r, 2))
    I = np.eye(r)

    def scal(c, x):
        return c[0] + c[1] * x + c[2] * x * x

    def f(x):
        P = _poly_factor(P_c)(x)
        blocks = np.concatenate([scal(a_c, x)[:, None, None] * I, scal(b_c, x)[:, None, None] * I], axis=2)
        return P @ blocks

    def g(x):
        Q = _poly_factor(Q_c)(x)
        return np.concatenate([scal(b_c, x)[:, None, None] * Q, -scal(a_c, x)[:, None, None] * Q], axis=1)

    if lower:
        return SemiSeparableKernel(r, 2 * r, 0, f, g, None, None, UNIT)
    return SemiSeparableKernel(r, 0, 2 * r, None, None, f, g, UNIT)


def random_disk_alphas(rng, count):
    rad = np.sqrt(rng.uniform(0, 1, count))
    ang = rng.uniform(0, 2 * math.pi, count)
    return rad * np.exp(1j * ang)


def seeded_symbol(L=2, M=2, seed=20240611, tau=1.0) -> RationalSymbolKernel:
    """Fixed random rational symbol used across the Wiener-Hopf checks."""
    rng = np.random.default_rng(seed)
    cplx = lambda n, s: s * (rng.normal(size=n) + 1j * rng.normal(size=n))
    lambdas = 0.5 + rng.random(L) + 0.5j * rng.normal(size=L)
    mus = 0.5 + rng.random(M) + 0.5j * rng.normal(size=M)
    return RationalSymbolKernel(cplx(L, 0.3), lambdas, cplx(M, 0.3), mus, tau)


def builtin_kernels():
    """``(name, kernel, grid_factory)`` for every application kernel."""
    out = []
    half = Potential.square_well(-1.0, 0.0, 1.0)
    out.append(("halfline z=-1", build_halfline_kernel(half, -1.0), lambda n, p=half: p.grid(n)))
    out.append(("halfline z=2+i", build_halfline_kernel(half, 2 + 1j), lambda n, p=half: p.grid(n)))
    line = Potential.square_well(-2.0, -1.0, 1.0, side="full-line")
    out.append(("line z=-1", None, line))
    out.append(("system z=-1", None, line))
    pot = PeriodicPotential(lambda x: np.cos(2 * np.pi * x), 1.0)
    params = FloquetParams(math.pi / 3, -2.0, 1.0)
    out.append(("floquet", build_Ktheta_kernel(pot, params), lambda n, p=pot: p.grid(n)))
    wh = RationalSymbolKernel([1], [1], [1], [1], 1.0)
    out.append(("exp(-|t|)", build_kernel(wh), lambda n: Grid.trapezoid(0.0, 1.0, n)))
    sym = seeded_symbol()
    out.append(("rational L=2 M=2", build_kernel(sym), lambda n, t=sym.tau: Grid.trapezoid(0.0, t, n)))
    resolved = []
    for name, kern, gf in out:
        if kern is None:
            # line kernels depend on the grid window; build them per grid
            builder = build_line_kernel if name.startswith("line") else build_system_kernel
            resolved.append((name, lambda n, p=gf, b=builder: _line_pair(p, b, n)))
        else:
            resolved.append((name, lambda n, k=kern, g=gf: (k, g(n))))
    return resolved


def _line_pair(pot, builder, n):
    grid = pot.grid(n)
    return builder(pot, -1.0, grid), grid
