"""scikit-learn style wrappers around the solver and the decay fit.

Rows of ``X`` are complex fields sampled on the estimator's grid. These
wrappers follow the fit/transform/predict and get_params conventions so they
compose with sklearn utilities such as ``clone``; they do not try to be
fully sklearn-compliant (complex inputs are rejected by sklearn's own
checks, so validation is done here).
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from hnls._validation import ValidationError, check_state_matrix
from hnls.core import DampingSpec, EquationParams, Field, Trajectory, make_grid
from hnls.solver import SolveConfig, solve


class HNLSPropagator(BaseEstimator, TransformerMixin):
    """Map initial data to the solution at ``t_final``.

    ``fit`` validates the configuration against the grid and the batch
    (decay at the box edges, dt dividing t_final); ``transform`` solves each
    row independently.
    """

    def __init__(self, half_width=40.0, n_points=1024, a=0.0, b=0.0, lam=0.0, beta=0.0,
                 delta=0.0, damping_profile="zero", d0=0.0, R0=1.0, t_final=1.0, dt=None,
                 scheme="strang_split", periodic_data=False):
        self.half_width = half_width
        self.n_points = n_points
        self.a = a
        self.b = b
        self.lam = lam
        self.beta = beta
        self.delta = delta
        self.damping_profile = damping_profile
        self.d0 = d0
        self.R0 = R0
        self.t_final = t_final
        self.dt = dt
        self.scheme = scheme
        self.periodic_data = periodic_data

    def _build(self):
        grid = make_grid(self.half_width, self.n_points)
        params = EquationParams(self.a, self.b, self.lam, self.beta, self.delta)
        damping = DampingSpec(self.damping_profile, self.d0, self.R0)
        cfg = SolveConfig(self.t_final, self.dt, self.scheme, periodic_data=self.periodic_data)
        cfg.resolve_steps(grid)
        return grid, params, damping, cfg

    def fit(self, X=None, y=None):
        self.grid_, self.params_, self.damping_, self.config_ = self._build()
        if X is not None:
            check_state_matrix(X, self.grid_.n_points)
        self.n_features_in_ = self.grid_.n_points
        return self

    def _check_fitted(self):
        if not hasattr(self, "grid_"):
            raise NotFittedError("HNLSPropagator is not fitted; call fit first")

    def trajectories(self, X):
        self._check_fitted()
        X = check_state_matrix(X, self.grid_.n_points)
        return [solve(Field(row, self.grid_), self.params_, self.damping_, self.config_)
                for row in X]

    def transform(self, X):
        return np.array([tr.states[-1] for tr in self.trajectories(X)])


class DecayRate(BaseEstimator, RegressorMixin):
    """Exponential fit M(t) ~ M0 exp(-gamma t) of mass samples.

    ``fit(t, mass)`` takes times and masses (or a Trajectory as ``t``);
    ``predict(t)`` returns the fitted mass. ``tail_fraction`` selects the
    part of the record used for the fit (0.5 = second half).
    """

    def __init__(self, tail_fraction=0.5):
        self.tail_fraction = tail_fraction

    def fit(self, t, mass=None):
        if isinstance(t, Trajectory):
            t, mass = t.times, t.masses()
        if mass is None:
            raise ValidationError("mass samples are required")
        t = np.asarray(t, dtype=float).ravel()
        mass = np.asarray(mass, dtype=float).ravel()
        if t.shape != mass.shape or t.size < 3:
            raise ValidationError("t and mass must be congruent with at least 3 samples")
        if np.any(mass <= 0):
            raise ValidationError("mass samples must be positive")
        if not 0 < self.tail_fraction <= 1:
            raise ValidationError("tail_fraction must lie in (0, 1]")
        keep = t >= t[0] + (1 - self.tail_fraction) * (t[-1] - t[0])
        if np.count_nonzero(keep) < 3:
            raise ValidationError("fewer than three samples fall in the fit window")
        slope, intercept = np.polyfit(t[keep], np.log(mass[keep]), 1)
        self.gamma_ = float(-slope)
        self.log_prefactor_ = float(intercept)
        return self

    def predict(self, t):
        if not hasattr(self, "gamma_"):
            raise NotFittedError("DecayRate is not fitted; call fit first")
        t = np.asarray(t, dtype=float)
        return np.exp(self.log_prefactor_ - self.gamma_ * t)

    def score(self, t, mass):
        """R^2 of log mass, the quantity that is actually fitted."""
        y = np.log(np.asarray(mass, dtype=float))
        fit = np.log(self.predict(t))
        ss_tot = np.sum((y - y.mean()) ** 2)
        if ss_tot == 0:
            return 1.0
        return float(1 - np.sum((y - fit) ** 2) / ss_tot)


__all__ = ["HNLSPropagator", "DecayRate"]
