import numpy as np
import pytest
from scipy.special import airy

from hnls._validation import ValidationError
from hnls.core import DampingSpec, EquationParams, Field, make_grid
from hnls.kernel import phi
from hnls.linear import propagate
from hnls.oracle import (
    airy_asymptotic,
    airy_reference,
    dense_linear_solve,
    green_mass,
    linear_generator,
    pde_pointwise_residual,
    phi_direct_quadrature,
)
from hnls.solver import SolveConfig, solve


class TestAiry:
    @pytest.mark.parametrize("x", [-12.0, -7.3, -1.0, 0.0, 0.5, 3.0, 8.0])
    def test_series_matches_scipy(self, x):
        ref = airy(x)[0]
        assert abs(airy_reference(x) - ref) < 1e-14 * max(1.0, abs(ref)) + 1e-16

    @pytest.mark.parametrize("x", [-12.0, -9.0, -6.5, 6.0, 9.0, 12.0])
    def test_series_against_asymptotics(self, x):
        ref = airy_reference(x)
        scale = abs(ref) if x > 0 else 1.0
        assert abs(airy_asymptotic(x) - ref) < 1e-7 * scale

    def test_guards(self):
        with pytest.raises(ValidationError):
            airy_reference(13.0)
        with pytest.raises(ValidationError):
            airy_asymptotic(2.0)


class TestDirectQuadrature:
    @pytest.mark.parametrize("a,x", [(0.0, -8.0), (0.0, 0.0), (0.0, 4.0), (0.5, -3.0),
                                     (-1.0, 2.0), (1.0, -10.0)])
    def test_matches_contour_evaluation(self, a, x):
        assert abs(phi_direct_quadrature(a, x) - phi(a, x)) < 1e-11

    def test_a_zero_is_airy(self):
        x = -4.0
        c = 3 ** (-1 / 3)
        assert phi_direct_quadrature(0.0, x).real == pytest.approx(c * airy_reference(c * x), abs=1e-11)

    def test_guard(self):
        with pytest.raises(ValidationError):
            phi_direct_quadrature(0.0, 40.0)


class TestDenseLinear:
    @pytest.fixture
    def grid(self):
        return make_grid(np.pi, 64)

    def test_generator_skew_hermitian(self, grid):
        A = linear_generator(grid, 1.0, 0.5)
        assert np.max(np.abs(A + A.conj().T)) < 1e-9 * np.max(np.abs(A))

    def test_matches_multiplier(self, grid, rng):
        from conftest import random_field

        u = random_field(grid, rng, decay=False)
        for a, b in [(0, 0), (1, 0.5), (-2, 2)]:
            dense = dense_linear_solve(u, 0.7, a, b).values
            fast = propagate(u, 0.7, a, b).values
            assert np.max(np.abs(dense - fast)) < 1e-9

    def test_size_guard(self):
        with pytest.raises(ValidationError):
            linear_generator(make_grid(1.0, 128))


class TestPointwiseResidual:
    def test_residual_small_and_shrinks(self):
        g = make_grid(20.0, 512)
        u = Field(np.exp(-g.x**2 / 4), g)
        p = EquationParams(a=1, b=0.5, lam=1, beta=1)
        res = []
        for stride in (8, 4):
            tr = solve(u, p, DampingSpec("constant", 0.2),
                       SolveConfig(0.2, dt=5e-4, scheme="if_rk4", snapshot_stride=stride))
            res.append(np.max(pde_pointwise_residual(tr)[1]))
        assert res[1] < 1e-3
        assert res[0] / res[1] > 3


@pytest.mark.slow
class TestGreenMass:
    @pytest.mark.parametrize("t", [0.1, 1.0])
    def test_unit_mass(self, t):
        assert abs(green_mass(t) - 1) < 1e-9
