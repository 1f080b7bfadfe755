import numpy as np
import pytest

from hnls._validation import ValidationError
from hnls.core import (
    DampingProfile,
    DampingSpec,
    EquationParams,
    Field,
    Trajectory,
    dealias_mask,
    edge_ratio,
    l2_norm_sq,
    make_grid,
    spectral_derivative,
)

from conftest import random_field


class TestGrid:
    def test_small_grid_layout(self):
        g = make_grid(np.pi, 8)
        assert g.spacing == pytest.approx(np.pi / 4)
        np.testing.assert_allclose(g.wavenumbers, [0, 1, 2, 3, -4, -3, -2, -1])
        assert np.count_nonzero(g.wavenumbers == 0) == 1

    def test_spacing(self):
        assert make_grid(40, 1024).spacing == 0.078125

    @pytest.mark.parametrize("L,N", [(1, 7), (1, 4), (0, 8), (-1, 8), (1, 12)])
    def test_rejects_bad_inputs(self, L, N):
        with pytest.raises(ValidationError):
            make_grid(L, N)

    def test_nodes_and_immutability(self):
        g = make_grid(2.0, 16)
        assert g.x[0] == -2.0 and g.x[-1] == pytest.approx(2.0 - g.spacing)
        with pytest.raises(ValueError):
            g.x[0] = 1.0

    def test_equality_and_hash(self):
        assert make_grid(3, 32) == make_grid(3.0, 32)
        assert len({make_grid(3, 32), make_grid(3, 32), make_grid(3, 64)}) == 2

    def test_nyquist_odd_symbol(self):
        g = make_grid(np.pi, 8)
        assert g.derivative_symbol(1)[4] == 0
        assert g.derivative_symbol(2)[4] == pytest.approx(-16)


class TestField:
    def test_finite_and_length(self, grid_small):
        with pytest.raises(ValidationError):
            Field(np.zeros(10), grid_small)
        bad = np.zeros(64)
        bad[3] = np.nan
        with pytest.raises(ValidationError):
            Field(bad, grid_small)

    def test_values_are_copied_and_frozen(self, grid_small):
        src = np.ones(64)
        u = Field(src, grid_small)
        src[0] = 5
        assert u.values[0] == 1
        with pytest.raises(ValueError):
            u.values[0] = 2


class TestNorms:
    def test_zero(self, grid_small):
        assert l2_norm_sq(Field.zeros(grid_small)) == 0

    def test_constant(self):
        g = make_grid(np.pi, 8)
        assert l2_norm_sq(Field(np.ones(8), g)) == pytest.approx(2 * np.pi)

    def test_gaussian(self):
        g = make_grid(40, 2048)
        u = Field.from_function(g, lambda x: np.exp(-x**2))
        assert abs(l2_norm_sq(u) - np.sqrt(np.pi / 2)) < 1e-10

    def test_parseval(self, rng):
        g = make_grid(5.0, 128)
        u = random_field(g, rng, decay=False)
        uh = np.fft.fft(u.values)
        ref = 2 * g.half_width / g.n_points**2 * np.sum(np.abs(uh) ** 2)
        assert l2_norm_sq(u) == pytest.approx(ref, rel=1e-12)

    def test_rejects_arrays(self):
        with pytest.raises(ValidationError):
            l2_norm_sq(np.ones(8))


class TestSpectralDerivative:
    def test_plane_wave(self, grid_small):
        u = Field.from_function(grid_small, lambda x: np.exp(1j * x))
        du = spectral_derivative(u, 1)
        np.testing.assert_allclose(du.values, 1j * u.values, atol=1e-12)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_constant(self, grid_small, order):
        u = Field(np.full(64, 2.5), grid_small)
        assert np.max(np.abs(spectral_derivative(u, order).values)) < 1e-12

    def test_third_derivative(self, grid_small):
        u = Field.from_function(grid_small, lambda x: np.sin(2 * x))
        expected = -8 * np.cos(2 * grid_small.x)
        assert np.max(np.abs(spectral_derivative(u, 3).values - expected)) < 1e-10

    def test_total_derivative_integrates_to_zero(self, rng):
        g = make_grid(6.0, 128)
        u = random_field(g, rng, decay=False)
        theta = Field(np.abs(u.values) ** 2, g)
        assert abs(np.sum(spectral_derivative(theta, 1).values) * g.spacing) < 1e-10

    def test_linearity(self, rng, grid_small):
        u, v = random_field(grid_small, rng), random_field(grid_small, rng)
        lhs = spectral_derivative(Field(2 * u.values - 3j * v.values, grid_small), 2).values
        rhs = 2 * spectral_derivative(u, 2).values - 3j * spectral_derivative(v, 2).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_order_checked(self, grid_small):
        with pytest.raises(ValidationError):
            spectral_derivative(Field.zeros(grid_small), 4)


class TestParamsAndDamping:
    def test_params_reject_negative_delta(self):
        with pytest.raises(ValidationError):
            EquationParams(delta=-1e-3)

    def test_params_replace(self):
        p = EquationParams(a=1, beta=2).replace(delta=0.1)
        assert (p.a, p.beta, p.delta) == (1.0, 2.0, 0.1)

    def test_negative_d0_cites_condition_a(self):
        with pytest.raises(ValidationError, match="Condition A"):
            DampingSpec("constant", d0=-1)

    def test_unknown_profile(self):
        with pytest.raises(ValidationError, match="valid"):
            DampingSpec("mystery")

    @pytest.mark.parametrize("profile", ["plateau_with_hole", "smooth_bump_complement"])
    def test_condition_a_profiles(self, profile):
        g = make_grid(20, 256)
        d = DampingSpec(profile, d0=0.7, R0=4)
        vals = d.evaluate(g)
        assert np.all(vals >= 0)
        assert np.all(vals[np.abs(g.x) >= 4] >= 0.7 * (1 - 1e-12))
        assert np.all(vals[np.abs(g.x) <= 2.9] == 0)
        assert d.satisfies_condition_a(g)

    def test_smooth_profile_derivative(self):
        g = make_grid(20, 8192)
        d = DampingSpec("smooth_bump_complement", d0=1.0, R0=4)
        fd = np.gradient(d.evaluate(g), g.spacing)
        assert np.max(np.abs(fd - d.derivative(g))) < 2e-3

    def test_samples_profile(self):
        g = make_grid(5, 32)
        d = DampingSpec(DampingProfile.SAMPLES, samples=np.linspace(0, 1, 32))
        np.testing.assert_allclose(d.evaluate(g), np.linspace(0, 1, 32))
        with pytest.raises(ValidationError):
            DampingSpec("samples", samples=-np.ones(32))
        with pytest.raises(ValidationError):
            d.evaluate(make_grid(5, 64))


class TestHelpers:
    def test_trajectory_requires_increasing_times(self, grid_small):
        states = np.zeros((3, 64))
        with pytest.raises(ValidationError):
            Trajectory(grid_small, [0, 1, 1], states)

    def test_trajectory_shape(self, grid_small):
        with pytest.raises(ValidationError):
            Trajectory(grid_small, [0, 1], np.zeros((3, 64)))

    def test_dealias_mask_keeps_two_thirds(self):
        g = make_grid(1, 128)
        # |k| < 128/3 keeps k = -42..42
        assert np.count_nonzero(dealias_mask(g)) == 85

    def test_edge_ratio(self, gaussian):
        assert edge_ratio(gaussian.values) < 1e-100
        assert edge_ratio(np.zeros(16)) == 0
        assert edge_ratio(np.ones(16)) == 1
