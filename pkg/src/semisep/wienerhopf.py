"""Truncated Wiener-Hopf operators on ``(0, tau)`` with rational symbols.

The convolution kernel is

    k(t) = sum_l alpha_l exp(-lambda_l t)   (t > 0),
    k(t) = sum_m beta_m  exp( mu_m t)       (t < 0),

with ``Re lambda, Re mu > 0``.  Its Laplace-side function
``1 - H(zeta) = 1 - sum alpha/(zeta + lambda) + sum beta/(zeta - mu)`` has a
numerator of degree ``N = L + M`` whose roots are stored as ``izeta``
(``1 - H(zeta) = prod(zeta + izeta_n) / prod(zeta + lambda) prod(zeta - mu)``).

The 2-modified determinant ``det2(I - K)`` is available three ways: through
the ``M x M`` matrix ``G``, and through the two closed-form subset sums.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .determinants import lu_det
from .errors import DegenerateSymbolError, SizeError
from .kernelcore import Grid, Interval, SemiSeparableKernel

#: largest N = L + M for which subset sums are enumerated
MAX_SUBSET_N = 24
#: roots closer than this are treated as a multiple root
ROOT_SEPARATION = 1e-8
#: root differences below this make the subset sums ill-defined
DIFFERENCE_GUARD = 1e-10


@dataclass(frozen=True)
class RationalSymbolKernel:
    """Coefficients and exponents of ``k`` plus the window length ``tau``."""

    alphas: tuple
    lambdas: tuple
    betas: tuple
    mus: tuple
    tau: float

    def __init__(self, alphas: Sequence[complex], lambdas: Sequence[complex], betas: Sequence[complex], mus: Sequence[complex], tau: float):
        al = tuple(complex(a) for a in alphas)
        la = tuple(complex(a) for a in lambdas)
        be = tuple(complex(a) for a in betas)
        mu = tuple(complex(a) for a in mus)
        if len(al) != len(la) or len(be) != len(mu):
            raise ValueError("alphas/lambdas and betas/mus must have matching lengths")
        if len(al) + len(be) < 1:
            raise ValueError("need at least one exponential term")
        if any(x.real <= 0 for x in la + mu):
            raise ValueError("all lambdas and mus need a positive real part")
        for name, seq in (("lambdas", la), ("mus", mu)):
            if len(set(seq)) != len(seq):
                raise ValueError(f"{name} must be pairwise distinct")
        if not tau > 0:
            raise ValueError("tau must be positive")
        object.__setattr__(self, "alphas", al)
        object.__setattr__(self, "lambdas", la)
        object.__setattr__(self, "betas", be)
        object.__setattr__(self, "mus", mu)
        object.__setattr__(self, "tau", float(tau))

    @property
    def L(self) -> int:
        return len(self.alphas)

    @property
    def M(self) -> int:
        return len(self.betas)

    @property
    def N(self) -> int:
        return self.L + self.M

    def k0_plus(self) -> complex:
        return complex(sum(self.alphas))

    def k0_minus(self) -> complex:
        return complex(sum(self.betas))

    def transposed(self) -> "RationalSymbolKernel":
        """Kernel of ``k(-t)``: the two exponential families swap roles."""
        return RationalSymbolKernel(self.betas, self.mus, self.alphas, self.lambdas, self.tau)

    def with_tau(self, tau: float) -> "RationalSymbolKernel":
        return RationalSymbolKernel(self.alphas, self.lambdas, self.betas, self.mus, tau)


def kernel_eval(k: RationalSymbolKernel, t: float) -> complex:
    """``k(t)`` for ``t != 0``; use ``k0_plus`` / ``k0_minus`` at zero."""
    if t == 0:
        raise ValueError("k jumps at t = 0; use k0_plus() or k0_minus()")
    if t > 0:
        return complex(sum(a * cmath.exp(-l * t) for a, l in zip(k.alphas, k.lambdas)))
    return complex(sum(b * cmath.exp(m * t) for b, m in zip(k.betas, k.mus)))


def symbol(k: RationalSymbolKernel, x: float) -> complex:
    """Fourier transform ``int e^{ixt} k(t) dt``."""
    return complex(
        sum(a / (l - 1j * x) for a, l in zip(k.alphas, k.lambdas))
        + sum(b / (m + 1j * x) for b, m in zip(k.betas, k.mus))
    )


def one_minus_H(k: RationalSymbolKernel, zeta: complex) -> complex:
    """``1 - sum alpha/(zeta + lambda) + sum beta/(zeta - mu)``."""
    return complex(
        1
        - sum(a / (zeta + l) for a, l in zip(k.alphas, k.lambdas))
        + sum(b / (zeta - m) for b, m in zip(k.betas, k.mus))
    )


def build_kernel(k: RationalSymbolKernel) -> SemiSeparableKernel:
    """Semi-separable form on ``(0, tau)``: ``f1 = (alpha_l e^{-lambda_l x})``,
    ``g1 = (e^{lambda_l x})^T``, ``f2 = (beta_m e^{mu_m x})``, ``g2 = (e^{-mu_m x})^T``."""
    al, la = np.array(k.alphas), np.array(k.lambdas)
    be, mu = np.array(k.betas), np.array(k.mus)
    f1 = lambda x: (al * np.exp(-np.outer(x, la)))[:, None, :]
    g1 = lambda x: np.exp(np.outer(x, la))[:, :, None]
    f2 = lambda x: (be * np.exp(np.outer(x, mu)))[:, None, :]
    g2 = lambda x: np.exp(-np.outer(x, mu))[:, :, None]
    return SemiSeparableKernel(1, k.L, k.M, f1 if k.L else None, g1 if k.L else None, f2 if k.M else None, g2 if k.M else None, Interval(0.0, k.tau))


def _poly_from_roots(roots) -> np.ndarray:
    p = np.array([1.0 + 0j])
    for r in roots:
        p = np.convolve(p, [1.0, -r])
    return p


def numerator_poly(k: RationalSymbolKernel) -> np.ndarray:
    """Monic coefficients (highest first) of the numerator of ``1 - H``."""
    la, mu = list(k.lambdas), list(k.mus)
    lam_factors = [-l for l in la]  # zeta + lambda has root -lambda
    full = np.convolve(_poly_from_roots(lam_factors), _poly_from_roots(mu))
    out = full.copy()
    N = k.N
    for j, a in enumerate(k.alphas):
        part = np.convolve(_poly_from_roots(lam_factors[:j] + lam_factors[j + 1 :]), _poly_from_roots(mu))
        out[N - part.size + 1 :] -= a * part
    for j, b in enumerate(k.betas):
        part = np.convolve(_poly_from_roots(lam_factors), _poly_from_roots(mu[:j] + mu[j + 1 :]))
        out[N - part.size + 1 :] += b * part
    return out


@dataclass(frozen=True)
class SymbolRoots:
    """``izeta[n]`` (the numerator roots are ``-izeta``) and residues ``gammas``.

    ``(1 - H(zeta))^{-1} = 1 + sum_n gammas[n] / (zeta + izeta[n])``.
    """

    izeta: np.ndarray
    gammas: np.ndarray

    @property
    def zetas(self) -> np.ndarray:
        """The roots in the ``zeta_n`` normalization, ``izeta / i``."""
        return self.izeta / 1j


def find_roots(k: RationalSymbolKernel, newton_steps: int = 3) -> SymbolRoots:
    """Roots of the numerator by companion-matrix eigenvalues plus Newton polishing.

    Residues are computed from partial fractions,
    ``gamma_n = D(r_n) / P'(r_n)`` with ``r_n = -izeta_n`` and ``D`` the
    denominator ``prod(zeta + lambda) prod(zeta - mu)``.
    """
    P = numerator_poly(k)
    dP = np.polyder(P)
    r = np.roots(P).astype(np.complex128)
    for _ in range(newton_steps):
        d = np.polyval(dP, r)
        step = np.where(d != 0, np.polyval(P, r) / np.where(d != 0, d, 1), 0)
        r = r - step
    if r.size > 1:
        gaps = np.abs(r[:, None] - r[None, :]) + np.diag(np.full(r.size, np.inf))
        if np.min(gaps) < ROOT_SEPARATION:
            raise DegenerateSymbolError(f"numerator has (nearly) repeated roots, gap {np.min(gaps):.3g}")
    r = r[np.lexsort((r.imag, r.real))]
    D = np.ones_like(r)
    for l in k.lambdas:
        D = D * (r + l)
    for m in k.mus:
        D = D * (r - m)
    gammas = D / np.polyval(dP, r)
    return SymbolRoots(-r, gammas)


def product_formula_gammas(k: RationalSymbolKernel, roots: SymbolRoots) -> np.ndarray:
    """Residues from the product with denominator ``prod_{n' != n}(izeta_n - izeta_n')``.

    This product carries the opposite orientation of the partial-fraction
    residue, so it differs from ``roots.gammas`` by ``(-1)^(N-1)``.  Kept as a
    diagnostic only.
    """
    iz = roots.izeta
    out = np.empty_like(iz)
    for n in range(iz.size):
        val = np.prod([l - iz[n] for l in k.lambdas]) * np.prod([-iz[n] - m for m in k.mus])
        val /= np.prod([iz[n] - iz[j] for j in range(iz.size) if j != n])
        out[n] = val
    return out


def reconstruct_betas(k: RationalSymbolKernel, roots: SymbolRoots) -> np.ndarray:
    """``beta_m = prod_n (mu_m + izeta_n) / (prod_l (mu_m + lambda_l) prod_{m' != m}(mu_m - mu_m'))``."""
    iz = roots.izeta
    out = []
    for j, m in enumerate(k.mus):
        num = np.prod(m + iz)
        den = np.prod([m + l for l in k.lambdas]) * np.prod([m - mp for i, mp in enumerate(k.mus) if i != j])
        out.append(num / den)
    return np.array(out, dtype=np.complex128)


def g_matrix(k: RationalSymbolKernel, roots: SymbolRoots) -> np.ndarray:
    """``G[m, m'] = delta + e^{-mu_m tau} beta_m' sum_n gamma_n e^{-izeta_n tau} / ((mu_m + izeta_n)(mu_m' + izeta_n))``."""
    M = k.M
    if M == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    mu, be, tau = np.array(k.mus), np.array(k.betas), k.tau
    iz, ga = roots.izeta, roots.gammas
    R = 1.0 / (mu[:, None] + iz[None, :])  # (M, N)
    w = ga * np.exp(-iz * tau)
    S = (R * w[None, :]) @ R.T
    return np.eye(M) + np.exp(-mu * tau)[:, None] * S * be[None, :]


def g_matrix_direct(k: RationalSymbolKernel, grid: Grid) -> np.ndarray:
    """``int_0^tau g2(x) fhat2(x) dx`` with ``fhat2`` from the forward Volterra sweep."""
    from .volterra import solve_fhat2

    kern = build_kernel(k)
    fhat2 = solve_fhat2(kern, 1.0, grid)
    g2 = kern.sample(grid).g2
    return grid.integrate(g2 @ fhat2)


def det2_via_G(k: RationalSymbolKernel, roots: Optional[SymbolRoots] = None) -> complex:
    """``det(I_M - G) exp(tau k(0-))``; ``1`` when ``M = 0``."""
    if k.M == 0:
        return 1.0 + 0j
    roots = roots if roots is not None else find_roots(k)
    return lu_det(np.eye(k.M) - g_matrix(k, roots)) * cmath.exp(k.tau * k.k0_minus())


def _guard_subsets(k: RationalSymbolKernel, roots: SymbolRoots) -> None:
    if k.N > MAX_SUBSET_N:
        raise SizeError(f"N = {k.N} exceeds the subset enumeration limit {MAX_SUBSET_N}")
    iz = roots.izeta
    if iz.size > 1:
        gaps = np.abs(iz[:, None] - iz[None, :]) + np.diag(np.full(iz.size, np.inf))
        if np.min(gaps) < DIFFERENCE_GUARD:
            raise DegenerateSymbolError("izeta differences too small for the subset sums")


def _exact_sum(terms: np.ndarray) -> complex:
    """Order-independent, correctly rounded sum of complex terms."""
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def subset_sum(a, b, P, size: int, backend: Optional[str] = None) -> complex:
    """``sum_{|S| = size} prod_S a prod_{not S} b prod_{s in S, t not in S} P[s, t]``."""
    return _exact_sum(_backend.subset_terms(a, b, P, size, backend))


def day_formula(
    k: RationalSymbolKernel,
    roots: Optional[SymbolRoots] = None,
    side: str = "a",
    orientation: str = "consistent",
    backend: Optional[str] = None,
) -> complex:
    """Closed-form ``det2(I - K)`` as a sum over ``M``-element subsets of the roots.

    Parameters
    ----------
    side : {"a", "b"}
        ``"a"`` sums over the complements of ``L``-subsets with weights
        ``prod(lambda - izeta) e^{-tau izeta}``; ``"b"`` sums over
        ``M``-subsets with the exponential attached to the complement.
    orientation : {"consistent", "printed"}
        ``"consistent"`` uses the cross factor ``1/(izeta_t - izeta_s)``
        (``s`` in the subset, ``t`` outside) on both sides.  ``"printed"``
        reverses it on the a-side, which multiplies that side by
        ``(-1)^(L M)``; kept to document the difference.
    """
    roots = roots if roots is not None else find_roots(k)
    _guard_subsets(k, roots)
    iz = roots.izeta
    la, mu = np.array(k.lambdas), np.array(k.mus)
    tau = k.tau
    lam_part = np.array([np.prod(la - z) for z in iz]) if k.L else np.ones(iz.size, dtype=complex)
    mu_part = np.array([np.prod(mu + z) for z in iz]) if k.M else np.ones(iz.size, dtype=complex)
    diff = iz[None, :] - iz[:, None]  # diff[s, t] = izeta_t - izeta_s
    np.fill_diagonal(diff, 1.0)
    P = 1.0 / diff
    cross = np.prod([m + l for l in la for m in mu]) if (k.L and k.M) else 1.0
    if side == "a":
        if orientation == "printed":
            P = -P
        a = lam_part * np.exp(-tau * iz)
        total = subset_sum(a, mu_part, P, k.M, backend)
        pref = cmath.exp(tau * k.k0_minus() - tau * complex(np.sum(mu)))
    elif side == "b":
        b = mu_part * np.exp(tau * iz)
        total = subset_sum(lam_part, b, P, k.M, backend)
        pref = cmath.exp(tau * k.k0_plus() - tau * complex(np.sum(la)))
    else:
        raise ValueError(f"unknown side {side!r}")
    return complex(pref * total / cross)


@dataclass(frozen=True)
class CauchyCheck:
    """Residuals of the structured factorizations of ``I_M - G``."""

    factorization: float
    gamma_product: float
    cauchy_inverse: float
    cauchy_det: float
    cauchy_binet: float

    @property
    def max_residual(self) -> float:
        return max(self.factorization, self.gamma_product, self.cauchy_inverse, self.cauchy_det, self.cauchy_binet)


def _rel(X, Y) -> float:
    X, Y = np.asarray(X), np.asarray(Y)
    scale = max(1.0, float(np.max(np.abs(Y))) if Y.size else 1.0)
    return float(np.max(np.abs(X - Y)) / scale) if X.size else 0.0


def cauchy_factorization_check(k: RationalSymbolKernel, roots: Optional[SymbolRoots] = None, n_subsets: int = 3, seed: int = 0) -> CauchyCheck:
    """Verify the Cauchy-matrix route from ``G`` to the subset sums.

    Checks ``I - G = diag(e^{-mu tau}) Gamma diag(beta)``,
    ``Gamma = A diag(gamma e^{-izeta tau}) Bm`` with ``A = 1/(mu_m + izeta_n)``
    and ``Bm = -A^T``, the explicit inverse ``A_psi^{-1} = D1 A_psi^T D2`` and
    ``det(A_psi)^2 = 1/(det D1 det D2)`` on ``n_subsets`` random column
    subsets, and the Cauchy-Binet expansion of ``det Gamma``.
    """
    roots = roots if roots is not None else find_roots(k)
    _guard_subsets(k, roots)
    M, N, tau = k.M, k.N, k.tau
    if M == 0:
        return CauchyCheck(0.0, 0.0, 0.0, 0.0, 0.0)
    mu, be = np.array(k.mus), np.array(k.betas)
    iz, ga = roots.izeta, roots.gammas
    A = 1.0 / (mu[:, None] + iz[None, :])
    Bm = -A.T
    w = ga * np.exp(-iz * tau)
    Gamma = -(A * w[None, :]) @ A.T
    G = g_matrix(k, roots)
    fact = _rel(np.eye(M) - G, np.exp(-mu * tau)[:, None] * Gamma * be[None, :])
    gprod = _rel(A @ np.diag(w) @ Bm, Gamma)

    rng = np.random.default_rng(seed)
    all_subsets = list(combinations(range(N), M))
    picks = rng.choice(len(all_subsets), size=min(n_subsets, len(all_subsets)), replace=False)
    inv_res = det_res = 0.0
    for p in picks:
        psi = list(all_subsets[p])
        Ap = A[:, psi]
        zp = iz[psi]
        D1 = np.array([
            np.prod(mu + zp[j]) / np.prod([zp[j] - zp[q] for q in range(M) if q != j])
            for j in range(M)
        ])
        D2 = np.array([
            np.prod(mu[j] + zp) / np.prod([mu[j] - mu[q] for q in range(M) if q != j])
            for j in range(M)
        ])
        inv_res = max(inv_res, _rel(np.diag(D1) @ Ap.T @ np.diag(D2), np.linalg.inv(Ap)))
        dA = lu_det(Ap)
        det_res = max(det_res, abs(dA * dA * np.prod(D1) * np.prod(D2) - 1.0))

    cb_terms = []
    for psi in all_subsets:
        psi = list(psi)
        cb_terms.append(lu_det(A[:, psi]) * lu_det(Bm[psi, :]) * np.prod(w[psi]))
    cb = _exact_sum(np.array(cb_terms))
    dG = lu_det(Gamma)
    cb_res = abs(cb - dG) / max(1.0, abs(dG))
    return CauchyCheck(fact, gprod, inv_res, det_res, cb_res)


def det_if_continuous(k: RationalSymbolKernel, roots: Optional[SymbolRoots] = None, atol: float = 1e-12) -> complex:
    """Plain ``det(I - K) = det2 exp(-tau k(0))``, defined only when ``k`` is continuous at zero.

    A jump at ``t = 0`` leaves ``K`` Hilbert-Schmidt but not trace class, in
    which case :class:`~semisep.errors.DomainError` is raised.
    """
    from .errors import DomainError

    jump = abs(k.k0_plus() - k.k0_minus())
    if jump > atol * max(1.0, abs(k.k0_plus())):
        raise DomainError(f"k jumps by {jump:.3g} at t = 0; only det2 is defined")
    return det2_via_G(k, roots) * cmath.exp(-k.tau * k.k0_plus())
