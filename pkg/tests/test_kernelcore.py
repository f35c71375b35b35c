import cmath
import math

import numpy as np
import pytest

from semisep.errors import DomainError, ShapeError
from semisep.kernelcore import (
    Grid,
    Interval,
    SemiSeparableKernel,
    eval_A,
    eval_B,
    eval_C,
    eval_H,
    eval_K,
    trace_A,
)
from semisep.schrodinger import Potential, build_halfline_kernel, build_system_kernel
from semisep.wienerhopf import RationalSymbolKernel, build_kernel

ONE = lambda x: np.ones_like(x)


def constant_kernel():
    return SemiSeparableKernel.scalar(ONE, ONE, ONE, ONE, Interval(0.0, 1.0))


def random_matrix_kernel(seed=0, m=2, n1=2, n2=1):
    rng = np.random.default_rng(seed)
    coef = {name: rng.normal(size=(r, c, 3)) + 1j * rng.normal(size=(r, c, 3)) for name, (r, c) in
            {"f1": (m, n1), "g1": (n1, m), "f2": (m, n2), "g2": (n2, m)}.items()}

    def make(name):
        a = coef[name]
        return lambda x: np.einsum("rcp,np->nrc", a, np.stack([np.ones_like(x), x, x * x], axis=-1))

    return SemiSeparableKernel(m, n1, n2, make("f1"), make("g1"), make("f2"), make("g2"), Interval(0.0, 1.0))


class TestInterval:
    def test_finite_truncation_is_whole_interval(self):
        iv = Interval(0.0, 2.0)
        assert (iv.lo, iv.hi) == (0.0, 2.0)
        assert iv.length == 2.0

    def test_infinite_needs_truncation(self):
        with pytest.raises(ValueError):
            Interval(0.0, np.inf)
        iv = Interval(0.0, np.inf, 0.0, 5.0)
        assert iv.contains(6.0) and not iv.contains(-1.0)
        assert (iv.lo, iv.hi) == (0.0, 5.0)

    @pytest.mark.parametrize("args", [(1.0, 0.0), (0.0, 1.0, -1.0, 1.0), (0.0, 1.0, 0.5, 0.5)])
    def test_rejects_bad_bounds(self, args):
        with pytest.raises(ValueError):
            Interval(*args)


class TestGrid:
    def test_trapezoid_weights_sum_to_length(self):
        g = Grid.trapezoid(-1.0, 2.0, 301)
        assert g.n == 301
        assert abs(g.weights.sum() - 3.0) < 1e-12
        assert np.all(np.diff(g.nodes) > 0)

    def test_breakpoints_become_nodes(self):
        g = Grid.trapezoid(0.0, 1.0, 100, breakpoints=[1 / 3, 0.7])
        for b in (1 / 3, 0.7):
            assert np.any(g.nodes == b)

    def test_trapezoid_is_second_order(self):
        errs = [abs(Grid.trapezoid(0, 1, n).integrate(np.exp(Grid.trapezoid(0, 1, n).nodes)) - (math.e - 1)) for n in (101, 201)]
        assert 3.9 < errs[0] / errs[1] < 4.1

    def test_gauss_legendre_exact_for_polynomials(self):
        g = Grid.gauss_legendre(0.0, 2.0, panels=3, order=4)
        assert abs(g.integrate(g.nodes ** 7) - 2.0 ** 8 / 8) < 1e-10
        assert abs(g.weights.sum() - 2.0) < 1e-12

    def test_cumulative_ends_at_integral(self):
        g = Grid.trapezoid(0, 1, 51)
        v = np.cos(g.nodes)
        c = g.cumulative(v)
        assert c[0] == 0 and abs(c[-1] - g.integrate(v)) < 1e-15

    def test_rejects_non_increasing_nodes(self):
        with pytest.raises(ValueError):
            Grid(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.5, 0.5]), "trapezoid")


class TestEvaluation:
    def test_constant_kernel(self):
        assert eval_K(constant_kernel(), 0.7, 0.3)[0, 0] == 1

    def test_lower_branch_product(self):
        kern = SemiSeparableKernel.scalar(lambda x: np.exp(1j * x), lambda x: np.exp(-1j * x), ONE, ONE, Interval(-1.0, 2.0))
        assert abs(eval_K(kern, 1.0, 0.0)[0, 0] - cmath.exp(1j)) < 1e-15

    def test_diagonal_uses_lower_branch(self):
        kern = SemiSeparableKernel.scalar(ONE, ONE, lambda x: 2 * np.ones_like(x), ONE, Interval(0.0, 1.0))
        assert eval_K(kern, 0.5, 0.5)[0, 0] == 1

    def test_halfline_kernel_value(self):
        # z = -1, V = -1 on (0, 3): K(2, 1) = -u(2) sinh(1) e^{-2} v(1)
        pot = Potential.square_well(-1.0, 0.0, 3.0)
        kern = build_halfline_kernel(pot, -1.0)
        u2 = pot.factors(np.array([2.0]))[0][0]
        v1 = pot.factors(np.array([1.0]))[1][0]
        expected = -u2 * math.sinh(1.0) * math.exp(-2.0) * v1
        assert abs(eval_K(kern, 2.0, 1.0)[0, 0] - expected) < 1e-14

    def test_H_vanishes_for_identical_branches(self):
        assert abs(eval_H(constant_kernel(), 0.2, 0.9)[0, 0]) == 0

    def test_H_for_exponential_symbol(self):
        kern = build_kernel(RationalSymbolKernel([1], [1], [1], [1], 2.0))
        for x, xp in [(0.5, 1.5), (1.7, 0.2)]:
            assert abs(eval_H(kern, x, xp)[0, 0] - (math.exp(-(x - xp)) - math.exp(x - xp))) < 1e-14

    def test_H_halfline_sine(self):
        pot = Potential.square_well(-3.0, 0.0, 4.0)
        kern = build_halfline_kernel(pot, 1.0)
        x, xp = 2.0, 2.0 - math.pi / 2
        u = pot.factors(np.array([x]))[0][0]
        v = pot.factors(np.array([xp]))[1][0]
        assert abs(eval_H(kern, x, xp)[0, 0] - u * v) < 1e-13

    def test_A_equals_B_times_C(self):
        kern = random_matrix_kernel()
        for x in np.random.default_rng(1).random(10):
            A = eval_A(kern, x)
            assert A.shape == (3, 3)
            assert np.max(np.abs(A - eval_B(kern, x) @ eval_C(kern, x))) < 1e-14

    def test_trace_identity(self):
        kern = random_matrix_kernel(seed=3)
        g = Grid.trapezoid(0, 1, 11)
        tr = trace_A(kern.sample(g))
        direct = [np.trace(eval_A(kern, x)) for x in g.nodes]
        assert np.max(np.abs(tr - direct)) < 1e-13

    def test_system_kernel_A_is_traceless(self):
        pot = Potential.square_well(-2.0, -1.0, 1.0, side="full-line")
        z = 1.5 + 0.5j
        kern = build_system_kernel(pot, z)
        k = cmath.sqrt(z)
        for x in (-0.7, 0.1, 0.8):
            A = eval_A(kern, x)
            Vx = -2.0
            expected = -1j / (2 * k) * Vx * np.array([[1, cmath.exp(-2j * k * x)], [-cmath.exp(2j * k * x), -1]])
            assert np.max(np.abs(A - expected)) < 1e-13
            assert abs(np.trace(A)) < 1e-14

    def test_outside_interval_raises(self):
        with pytest.raises(DomainError):
            eval_K(constant_kernel(), 1.5, 0.2)

    def test_wrong_shape_raises(self):
        kern = SemiSeparableKernel(2, 1, 1, lambda x: np.ones((x.size, 3, 1)), ONE, ONE, ONE, Interval(0.0, 1.0))
        with pytest.raises(ShapeError):
            kern.sample(Grid.trapezoid(0, 1, 5))


class TestSampling:
    def test_samples_cached_per_grid(self):
        calls = []

        def f(x):
            calls.append(x.size)
            return np.ones_like(x)

        kern = SemiSeparableKernel.scalar(f, ONE, ONE, ONE, Interval(0.0, 1.0))
        g = Grid.trapezoid(0, 1, 9)
        kern.sample(g)
        kern.sample(g)
        assert calls == [9]
        kern.sample(Grid.trapezoid(0, 1, 9))
        assert calls == [9, 9]

    def test_samples_are_read_only(self):
        s = constant_kernel().sample(Grid.trapezoid(0, 1, 5))
        with pytest.raises(ValueError):
            s.f1[0, 0, 0] = 2.0

    def test_non_finite_rejected(self):
        kern = SemiSeparableKernel.scalar(lambda x: np.full_like(x, np.nan), ONE, ONE, ONE, Interval(0.0, 1.0))
        with pytest.raises(ValueError):
            kern.sample(Grid.trapezoid(0, 1, 5))

    def test_pure_volterra_allows_missing_factors(self):
        kern = SemiSeparableKernel(1, 1, 0, ONE, ONE, None, None, Interval(0.0, 1.0))
        s = kern.sample(Grid.trapezoid(0, 1, 4))
        assert s.f2.shape == (4, 1, 0) and s.C.shape == (4, 1, 1)

    def test_missing_required_factor(self):
        with pytest.raises(ValueError):
            SemiSeparableKernel(1, 1, 1, ONE, ONE, None, ONE, Interval(0.0, 1.0))
