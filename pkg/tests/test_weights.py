import numpy as np
import pytest
from scipy.integrate import quad

from hnls._validation import ValidationError
from hnls.core import Field, make_grid
from hnls.weights import (
    WeightSpec,
    eval_eta,
    eval_eta_derivative,
    eval_rho,
    eval_rho_derivative,
    eval_rho_prime,
    eval_rho_truncated,
    eval_rho_truncated_derivative,
    weight_values,
    weighted_norm_sq,
)

SPECS = [WeightSpec(0.75, 0.5), WeightSpec(0.5, 0.25), WeightSpec(0.0, 1.0), WeightSpec(1.0, 0.3)]


class TestEta:
    def test_endpoints(self):
        assert eval_eta(-1.0) == 0.0
        assert eval_eta(2.0) == 1.0
        assert eval_eta(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_partition_of_unity(self):
        x = np.linspace(-0.5, 1.5, 2001)
        assert np.max(np.abs(eval_eta(x) + eval_eta(1 - x) - 1)) < 1e-15

    def test_monotone(self):
        x = np.linspace(-0.2, 1.2, 5001)
        assert np.all(np.diff(eval_eta(x)) >= 0)

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_against_differences(self, order):
        x = np.linspace(0.05, 0.95, 181)
        h = 1e-4
        lower = eval_eta_derivative(x - h, order - 1) if order > 1 else eval_eta(x - h)
        upper = eval_eta_derivative(x + h, order - 1) if order > 1 else eval_eta(x + h)
        fd = (upper - lower) / (2 * h)
        exact = eval_eta_derivative(x, order)
        assert np.max(np.abs(fd - exact)) < 1e-5 * max(1.0, np.max(np.abs(exact)))


class TestRho:
    def test_left_branch(self):
        spec = WeightSpec(0.75, 0.5)
        assert eval_rho(spec, -2.0) == pytest.approx(np.exp(-2.0), rel=1e-14)
        assert eval_rho_prime(spec, -2.0) == pytest.approx(np.exp(-2.0), rel=1e-14)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 2.0])
    def test_right_branch(self, eps):
        assert eval_rho(WeightSpec(0.75, eps), 3.0) == pytest.approx(8.0, rel=1e-14)
        assert eval_rho_prime(WeightSpec(0.5, eps), 3.0) == pytest.approx(1.0, rel=1e-14)

    def test_alpha_zero_branch(self):
        assert eval_rho(WeightSpec(0.0, 0.7), 0.0) == pytest.approx(1.0, rel=1e-14)
        x = 4.0
        assert eval_rho(WeightSpec(0.0, 0.7), x) == pytest.approx(2 - 1 / np.log(x + np.e))

    @pytest.mark.parametrize("spec", SPECS)
    def test_monotone_and_positive(self, spec):
        x = np.linspace(-50, 50, 20001)
        r = eval_rho(spec, x)
        assert np.all(r > 0)
        assert np.all(np.diff(r) >= 0)
        mid = np.linspace(-0.999, -0.001, 999)
        assert np.all(eval_rho_prime(spec, mid) > 0)

    @pytest.mark.parametrize("spec", SPECS)
    def test_join_is_continuous_to_third_order(self, spec):
        for x0 in (-1.0, 0.0):
            for k in range(4):
                lo = eval_rho_derivative(spec, x0 - 1e-9, k)
                hi = eval_rho_derivative(spec, x0 + 1e-9, k)
                assert hi == pytest.approx(lo, rel=1e-6, abs=1e-9)

    @pytest.mark.parametrize("spec", SPECS[:2])
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_against_differences(self, spec, order):
        x = np.linspace(-3, 3, 601)
        h = 1e-5
        fd = (eval_rho_derivative(spec, x + h, order - 1)
              - eval_rho_derivative(spec, x - h, order - 1)) / (2 * h)
        exact = eval_rho_derivative(spec, x, order)
        assert np.max(np.abs(fd - exact) / eval_rho(spec, x)) < 1e-3

    @pytest.mark.parametrize("spec", SPECS)
    def test_log_derivative_bounds(self, spec):
        # |rho^(j)| <= C rho with C stable under refinement of the sample grid
        consts = []
        for n in (16001, 64001):
            x = np.linspace(-50, 50, n)
            consts.append([np.max(np.abs(eval_rho_derivative(spec, x, j)) / eval_rho(spec, x))
                           for j in (1, 2, 3)])
        consts = np.array(consts)
        assert np.all(np.isfinite(consts))
        np.testing.assert_allclose(consts[0], consts[1], rtol=0.05)

    def test_too_small_eps_is_reported(self):
        with pytest.raises(ValidationError, match="too small"):
            eval_rho(WeightSpec(0.75, 0.01), -0.5)

    def test_truncated_spec_rejected_by_plain_eval(self):
        with pytest.raises(ValidationError):
            eval_rho(WeightSpec(0.75, 0.5, 5.0), 0.0)


class TestTruncated:
    def test_examples(self):
        spec = WeightSpec(0.75, 0.5, truncation_r=5.0)
        assert eval_rho_truncated(spec, 3.0) == pytest.approx(8.0, rel=1e-14)
        assert eval_rho_truncated(spec, 7.0) == pytest.approx(7**1.5, rel=1e-14)
        v = eval_rho_truncated(spec, 5.5)
        assert eval_rho(spec.untruncated(), 5.0) <= v <= 7**1.5

    def test_converges_monotonically_in_r(self):
        x = np.linspace(-5, 8, 131)
        base = eval_rho(WeightSpec(0.75, 0.5), x)
        gaps = [np.max(base - eval_rho_truncated(WeightSpec(0.75, 0.5, r), x)) for r in (2, 4, 8)]
        assert gaps[0] >= gaps[1] >= gaps[2] >= -1e-12
        assert gaps[2] < 1e-12

    def test_derivative_controlled_by_untruncated(self):
        x = np.linspace(-5, 15, 4001)
        spec = WeightSpec(0.75, 0.5, 5.0)
        d_trunc = eval_rho_truncated_derivative(spec, x, 1)
        d_full = eval_rho_prime(spec.untruncated(), x)
        assert np.all(d_trunc >= -1e-12)
        assert np.max(d_trunc / d_full) < 10


class TestWeightedNorm:
    def test_zero_field(self, grid_small):
        assert weighted_norm_sq(Field.zeros(grid_small), WeightSpec(0.75, 0.5)) == 0

    def test_unit_weight(self):
        g = make_grid(np.pi, 64)
        assert weighted_norm_sq(Field(np.ones(64), g), 0.0) == pytest.approx(2 * np.pi)

    def test_plus_part_weight_against_quadrature(self):
        left, _ = quad(lambda x: np.exp(-2 * x**2), -np.inf, 0, epsabs=1e-14)
        right, _ = quad(lambda x: np.exp(-2 * x**2) * (1 + x) ** 1.5, 0, np.inf, epsabs=1e-14)
        exact = left + right
        sums = []
        for N in (2048, 4096, 8192):
            g = make_grid(40, N)
            u = Field.from_function(g, lambda x: np.exp(-x**2))
            sums.append(weighted_norm_sq(u, 1.5))
        # (1 + x_+)^{3/2} has a kink at 0, so the nodal sum is only O(h^2):
        # its leading error is -(h^2/12) times the slope jump 3/2
        h = 80 / 2048
        assert sums[0] - exact == pytest.approx(-h**2 / 8, rel=1e-3)
        assert abs((4 * sums[2] - sums[1]) / 3 - exact) < 1e-8

    def test_weight_values_dispatch(self):
        x = np.array([-1.0, 0.5, 3.0])
        np.testing.assert_allclose(weight_values(2.0, x), [1.0, 2.25, 16.0])
        np.testing.assert_allclose(weight_values(2.0, x, 1), [0.0, 3.0, 8.0])
        with pytest.raises(ValidationError):
            weight_values(2.0, x, 2)
