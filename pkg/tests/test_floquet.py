import cmath
import math

import numpy as np
import pytest

from oracles import discriminant
from semisep.errors import SpectralCollisionError
from semisep.floquet import (
    FloquetParams,
    PeriodicPotential,
    build_Ktheta_kernel,
    det_Ktheta,
    floquet_solutions,
    free_green_theta,
    monodromy,
)
from semisep.kernelcore import eval_K

COSINE = PeriodicPotential(lambda x: np.cos(2 * np.pi * x), 1.0)
cosine_scalar = lambda x: math.cos(2 * math.pi * x)


class TestParams:
    def test_collision_guard(self):
        # k omega = pi/3 collides with theta = pi/3
        with pytest.raises(SpectralCollisionError):
            FloquetParams(math.pi / 3, (math.pi / 3) ** 2, 1.0)

    def test_rejects_bad_period(self):
        with pytest.raises(ValueError):
            PeriodicPotential(lambda x: x, 0.0)


class TestMonodromy:
    @pytest.mark.parametrize("z", [-2.0, 3.0 + 0.5j])
    def test_free_discriminant(self, z):
        zero = PeriodicPotential(lambda x: np.zeros_like(x), 1.5)
        _, delta = monodromy(zero, z)
        assert abs(delta - cmath.cos(cmath.sqrt(z) * 1.5)) < 1e-10

    def test_unimodular(self):
        Phi, _ = monodromy(COSINE, -0.5)
        assert abs(np.linalg.det(Phi) - 1) < 1e-10

    def test_against_oracle(self):
        _, delta = monodromy(COSINE, -2.0)
        assert abs(delta - discriminant(cosine_scalar, -2.0, 1.0)) < 1e-10


class TestKernel:
    @pytest.mark.parametrize("x, xp", [(0.7, 0.2), (0.2, 0.7), (0.45, 0.9)])
    def test_matches_green_function(self, x, xp):
        params = FloquetParams(1.0, -2 + 0.3j, 1.0)
        kern = build_Ktheta_kernel(COSINE, params)
        u = COSINE.factors(np.array([x]))[0][0]
        v = COSINE.factors(np.array([xp]))[1][0]
        assert abs(eval_K(kern, x, xp)[0, 0] + u * free_green_theta(COSINE, params, x, xp) * v) < 1e-14

    def test_green_function_is_quasi_periodic(self):
        # G(omega, x') = e^{i theta} G(0, x') for the theta boundary condition
        params = FloquetParams(0.8, -1.0 + 0.2j, 1.0)
        a = free_green_theta(COSINE, params, 1.0, 0.3)
        b = free_green_theta(COSINE, params, 0.0, 0.3)
        assert abs(a - cmath.exp(0.8j) * b) < 1e-13


class TestSolutions:
    def test_free_data(self):
        g = COSINE.grid(400)
        k = cmath.sqrt(-2.0)
        s = floquet_solutions(COSINE, -2.0, g)
        assert abs(s.phi_plus.values[0] - 1) < 1e-15
        assert abs(s.psi_minus.values[-1] - cmath.exp(-1j * k)) < 1e-14


class TestDeterminant:
    @pytest.mark.parametrize("theta", [math.pi / 3, math.pi / 2])
    @pytest.mark.parametrize("z", [-2.0, -0.5])
    def test_routes_and_discriminant(self, theta, z):
        r = det_Ktheta(COSINE, FloquetParams(theta, z, 1.0), COSINE.grid(2000))
        assert r.route_discrepancy < 1e-5
        orc = discriminant(cosine_scalar, z, 1.0)
        assert abs(r.delta_recovered - orc) / abs(orc) < 1e-5
        assert not r.flagged

    def test_delta_independent_of_theta(self):
        z = -0.5
        deltas = [det_Ktheta(COSINE, FloquetParams(t, z, 1.0), COSINE.grid(2000)).delta_recovered
                  for t in (math.pi / 3, math.pi / 2, 2.5)]
        assert max(abs(a - b) for a in deltas for b in deltas) < 1e-5

    def test_free_potential_gives_one(self):
        zero = PeriodicPotential(lambda x: np.zeros_like(x), 1.0)
        r = det_Ktheta(zero, FloquetParams(math.pi / 2, -1.0, 1.0), zero.grid(50))
        assert abs(r.det - 1) < 1e-14

    def test_explicit_formula(self):
        z, theta = -2.0 + 0.4j, math.pi / 3
        r = det_Ktheta(COSINE, FloquetParams(theta, z, 1.0), COSINE.grid(2000))
        k = cmath.sqrt(z)
        delta = discriminant(cosine_scalar, z, 1.0)
        expected = (delta - math.cos(theta)) / (cmath.cos(k) - math.cos(theta))
        assert abs(r.det - expected) / abs(expected) < 1e-6
