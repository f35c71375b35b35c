import math

import numpy as np
import pytest

from factories import UNIT, nilpotent_volterra_kernel, random_kernel
from oracles import COS_ONE, COS_TWO
from semisep.errors import SizeError
from semisep.kernelcore import Grid, SemiSeparableKernel
from semisep.nystrom import MAX_DENSE, discretize, oracle_det, oracle_det2
from semisep.wienerhopf import RationalSymbolKernel, build_kernel

ONE = lambda x: np.ones_like(x)


def exp_abs(tau=1.0):
    return build_kernel(RationalSymbolKernel([1], [1], [1], [1], tau))


class TestDiscretize:
    def test_rank_one_matrix(self):
        d = discretize(SemiSeparableKernel.scalar(ONE, ONE, ONE, ONE, UNIT), Grid.trapezoid(0, 1, 40))
        s = np.linalg.svd(d.matrix, compute_uv=False)
        assert s[1] < 1e-12 and abs(s[0] - 1) < 1e-12

    def test_symmetric_kernel_gives_symmetric_matrix(self):
        d = discretize(exp_abs(), Grid.trapezoid(0, 1, 30))
        assert np.max(np.abs(d.matrix - d.matrix.T)) < 1e-15

    def test_entry(self):
        g = Grid.trapezoid(0, 1, 11)
        d = discretize(exp_abs(), g)
        i, j = 7, 2
        expected = math.sqrt(g.weights[i] * g.weights[j]) * math.exp(-abs(g.nodes[i] - g.nodes[j]))
        assert abs(d.matrix[i, j] - expected) < 1e-15

    def test_diagonal_rules(self):
        kern = SemiSeparableKernel.scalar(ONE, ONE, lambda x: 3 * np.ones_like(x), ONE, UNIT)
        g = Grid.trapezoid(0, 1, 5)
        w = g.weights
        assert np.allclose(np.diag(discretize(kern, g, "lower").matrix), w)
        assert np.allclose(np.diag(discretize(kern, g, "average").matrix), 2 * w)
        with pytest.raises(ValueError):
            discretize(kern, g, "upper")

    def test_matrix_kernel_layout(self):
        kern = random_kernel(np.random.default_rng(0), m=2, n1=1, n2=2)
        g = Grid.trapezoid(0, 1, 6)
        d = discretize(kern, g)
        s = kern.sample(g)
        i, j = 4, 1
        block = d.matrix[2 * i:2 * i + 2, 2 * j:2 * j + 2]
        expected = math.sqrt(g.weights[i] * g.weights[j]) * s.f1[i] @ s.g1[j]
        assert np.max(np.abs(block - expected)) < 1e-14

    def test_size_guard(self):
        n = MAX_DENSE // 2 + 1
        kern = random_kernel(np.random.default_rng(0), m=2)
        with pytest.raises(SizeError):
            discretize(kern, Grid.trapezoid(0, 1, n))


class TestOracle:
    def test_alpha_zero(self):
        d = discretize(exp_abs(), Grid.trapezoid(0, 1, 20))
        assert oracle_det(d, 0.0) == 1

    @pytest.mark.parametrize("alpha", [0.25, 2.0 - 1j])
    def test_rank_one(self, alpha):
        d = discretize(SemiSeparableKernel.scalar(ONE, ONE, ONE, ONE, UNIT), Grid.trapezoid(0, 1, 50))
        assert abs(oracle_det(d, alpha) - (1 - alpha)) < 1e-12

    def test_det2_matches_cos(self):
        d = discretize(exp_abs(), Grid.trapezoid(0, 1, 1000))
        assert abs(oracle_det2(d, 1.0) - COS_ONE) < 1e-6

    def test_det2_over_det_is_trace_exponential(self):
        d = discretize(exp_abs(), Grid.trapezoid(0, 1, 100))
        ratio = oracle_det2(d, 0.7) / oracle_det(d, 0.7)
        assert abs(ratio - np.exp(0.7 * np.trace(d.matrix))) < 1e-12

    def test_nilpotent_volterra_is_one(self):
        # zero diagonal and one-sided support: the matrix is strictly triangular
        kern = nilpotent_volterra_kernel(np.random.default_rng(1), r=1)
        d = discretize(kern, Grid.trapezoid(0, 1, 100))
        assert abs(oracle_det(d, 0.6 + 0.2j) - 1) < 1e-14

    def test_refinement_reduces_error(self):
        errs = []
        # tau = 2: at tau = 1 the leading error term happens to vanish
        for n in (100, 200, 400):
            d = discretize(exp_abs(2.0), Grid.trapezoid(0, 2, n))
            errs.append(abs(oracle_det2(d, 1.0) - COS_TWO))
        assert errs[0] > errs[1] > errs[2]
