import os
import subprocess
import sys

import numpy as np
import pytest

from semisep import _backend, _fallback

compiled = pytest.mark.skipif(not _backend.compiled_available(), reason="compiled backend not built")


def sweep_inputs(seed, N=300, m=2, n=3, p=2):
    rng = np.random.default_rng(seed)
    c = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    dx = rng.uniform(0.5, 1.5, N - 1) / N
    return c(N, m, n), c(N, n, m), c(N, m, p), dx


class TestFallback:
    def test_sweep_scalar_exponential(self):
        # y = 1 + int_0^x y  ->  e^x; the trapezoid march is second order
        N = 401
        ones = np.ones((N, 1, 1), complex)
        y, S = _fallback.forward_sweep(ones, ones, ones, np.full(N - 1, 1 / (N - 1)), 1.0)
        assert abs(y[-1, 0, 0] - np.e) < 1e-5
        assert abs(S[-1, 0, 0] - (np.e - 1)) < 1e-5

    def test_sweep_empty(self):
        y, S = _fallback.forward_sweep(np.zeros((0, 1, 1)), np.zeros((0, 1, 1)), np.zeros((0, 1, 1)), np.zeros(0), 1.0)
        assert y.shape == (0, 1, 1) and S.shape == (0, 1, 1)

    def test_subset_terms_count_and_order(self):
        a = np.array([1, 2, 3, 4], complex)
        b = np.ones(4, complex)
        P = np.ones((4, 4), complex)
        t = _fallback.subset_terms(a, b, P, 2)
        assert t.size == 6 and t[0] == 2 and t[-1] == 12


@compiled
class TestParity:
    @pytest.mark.parametrize("seed", range(3))
    def test_forward_sweep(self, seed):
        C, B, F, dx = sweep_inputs(seed)
        alpha = 0.7 - 0.3j
        y1, S1 = _backend.forward_sweep(C, B, F, dx, alpha, backend="python")
        y2, S2 = _backend.forward_sweep(C, B, F, dx, alpha, backend="compiled")
        scale = np.max(np.abs(y1))
        assert np.max(np.abs(y1 - y2)) < 1e-12 * scale
        assert np.max(np.abs(S1 - S2)) < 1e-12 * np.max(np.abs(S1))

    @pytest.mark.parametrize("size", [0, 1, 3, 6])
    def test_subset_terms(self, size):
        rng = np.random.default_rng(size)
        a, b = rng.normal(size=(2, 6)) + 1j
        P = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        t1 = _backend.subset_terms(a, b, P, size, backend="python")
        t2 = _backend.subset_terms(a, b, P, size, backend="compiled")
        assert t1.shape == t2.shape
        assert np.max(np.abs(t1 - t2)) < 1e-13 * np.max(np.abs(t1))


class TestSelection:
    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            _backend.subset_terms(np.ones(2), np.ones(2), np.ones((2, 2)), 1, backend="gpu")

    def test_env_forces_fallback(self):
        env = dict(os.environ, SEMISEP_PURE_PYTHON="1")
        code = "from semisep import _backend; print(_backend.BACKEND)"
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        assert out.stdout.strip() == "python"

    @compiled
    def test_default_is_compiled(self):
        env = {k: v for k, v in os.environ.items() if k != "SEMISEP_PURE_PYTHON"}
        code = "from semisep import _backend; print(_backend.BACKEND)"
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        assert out.stdout.strip() == "compiled"
