import csv

import numpy as np
import pytest
from scipy.special import airy

from hnls._validation import ValidationError
from hnls.kernel import (
    KernelQuery,
    certify_envelope,
    green,
    green_batch,
    kernel_weighted_norm,
    phi,
    phi_batch,
    phi_ode_residual,
    phi_rays,
    tabulate,
    write_tabulation,
)

PHI0_AT_ZERO = 0.24616270387390  # 3^{-1/3} Ai(0), frozen from the series oracle


def airy_scaled(x, n=0):
    s = 3 ** (-1 / 3)
    ai, aip, _, _ = airy(s * np.asarray(x))
    return s * ai if n == 0 else s * s * aip


class TestPhi:
    def test_value_at_origin(self):
        assert phi(0, 0, 0) == pytest.approx(PHI0_AT_ZERO, abs=1e-13)

    @pytest.mark.parametrize("n", [0, 1])
    def test_airy_reduction(self, n):
        xs = np.linspace(-10, 5, 61)
        vals = np.array([phi(0, x, n) for x in xs])
        assert np.max(np.abs(vals - airy_scaled(xs, n))) < 1e-12
        assert np.max(np.abs(vals.imag)) < 1e-13

    def test_conjugate_symmetry(self, rng):
        for a, x in zip(rng.uniform(-2, 2, 8), rng.uniform(-15, 8, 8)):
            assert np.conj(phi(a, x)) == pytest.approx(phi(-a, x), abs=1e-12)

    def test_shift_relation(self, rng):
        # Phi_a(x) = exp(i(a x/3 - 2 a^3/27)) Phi_0(x - a^2/3)
        for a, x in zip(rng.uniform(-2, 2, 6), rng.uniform(-10, 6, 6)):
            ref = np.exp(1j * (a * x / 3 - 2 * a**3 / 27)) * airy_scaled(x - a * a / 3)
            assert phi(a, x) == pytest.approx(ref, abs=1e-12)

    def test_batch_matches_adaptive(self):
        xs = np.linspace(-30, 12, 97)
        for a in (-1.5, 0.0, 0.7):
            for n in (0, 1):
                adaptive = np.array([phi(a, x, n) for x in xs])
                assert np.max(np.abs(phi_batch(a, xs, n) - adaptive)) < 1e-12

    def test_unshifted_rays_agree(self):
        for a, x in [(0, 0), (1, 2), (-0.5, -3), (2, 1)]:
            assert phi_rays(a, x) == pytest.approx(phi(a, x), abs=1e-10)

    def test_return_error(self):
        val, err = phi(0.5, -4.0, 1, return_error=True)
        assert 0 <= err < 1e-10
        assert val == phi(0.5, -4.0, 1)

    def test_bad_order(self):
        with pytest.raises(ValidationError):
            phi(0, 0, 2)
        with pytest.raises(ValidationError):
            KernelQuery(0.0, 1.0, derivative_order=3)


class TestOdeResidual:
    @pytest.mark.parametrize("a,x,tol", [(0, -5, 1e-6), (1, 2, 1e-6), (0, 0, 1e-8)])
    def test_examples(self, a, x, tol):
        assert phi_ode_residual(a, x) < tol


class TestGreen:
    def test_reduces_to_phi(self):
        for x in (-3.0, 0.0, 2.0):
            assert green(1, x) == phi(0, x)

    def test_scaling(self):
        assert green(8, 0) == pytest.approx(0.5 * phi(0, 0), rel=1e-14)

    def test_derivative_scaling(self):
        t, x, a, b = 0.5, 1.2, 0.8, -0.3
        s = t ** (1 / 3)
        ref = phi(a * s, (x - b * t) / s, 1) / s**2
        assert green(t, x, a, b, 1) == pytest.approx(ref, rel=1e-14)

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValidationError):
            green(0.0, 1.0)
        with pytest.raises(ValidationError):
            green_batch(-1.0, [0.0])

    def test_weighted_norm_positive_and_finite(self):
        v0 = kernel_weighted_norm(0.5, 0.0, 0.75, 0.5)
        v1 = kernel_weighted_norm(0.5, 0.0, 0.75, 0.5, n=1)
        assert 0 < v0 < np.inf and 0 < v1 < np.inf


class TestEnvelope:
    def test_left_slope(self):
        rep = certify_envelope(0, 0, (-200, -10))["left"]
        assert -0.30 <= rep.fitted_rate <= -0.20
        assert rep.max_violation >= 0

    def test_left_slope_derivative(self):
        rep = certify_envelope(0, 1, (-200, -10))["left"]
        assert 0.20 <= rep.fitted_rate <= 0.30

    def test_right_stretched_exponential(self):
        rep = certify_envelope(0, 0, (2, 12))["right"]
        assert rep.fitted_rate > 0
        assert rep.r_squared > 0.99

    def test_both_sides(self):
        reps = certify_envelope(0.5, 0, (-40, 8))
        assert set(reps) == {"left", "right"}

    def test_empty_range(self):
        with pytest.raises(ValidationError):
            certify_envelope(0, 0, (3, 3))


class TestTabulation:
    def test_csv_layout(self, tmp_path):
        rows = tabulate(0.0, [-1.0, 0.0, 1.0])
        path = tmp_path / "k.csv"
        write_tabulation(path, rows)
        with open(path) as fh:
            data = list(csv.reader(fh))
        assert data[0] == ["a", "x", "n", "re", "im", "err_estimate"]
        assert abs(float(data[2][3]) - PHI0_AT_ZERO) < 1e-13
        assert len(data) == 4
